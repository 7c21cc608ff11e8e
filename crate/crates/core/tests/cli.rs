//! The command-line front end and the files it writes.

use std::fs;
use std::path::Path;
use std::process::Command;

use lattice_kubo::runner::{run_conductivity, EnsembleSummary, ExperimentConfig};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lattice-kubo"))
}

fn run_in(dir: &Path, args: &[&str]) -> i32 {
    let out = bin().args(args).arg("--out").arg(dir).output().unwrap();
    out.status.code().unwrap()
}

const SMALL: &[&str] = &["conductivity", "--half-side", "6", "--seeds", "6", "--tmax", "3", "--tsteps", "60"];

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(run_in(&a, &[SMALL, &["--jobs", "1"]].concat()), 0);
    assert_eq!(run_in(&b, &[SMALL, &["--jobs", "4"]].concat()), 0);
    for name in ["sigma_p.csv", "measure.csv", "measure_density.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn csv_and_json_agree() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), SMALL), 0);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    let summary: EnsembleSummary = serde_json::from_value(json["summary"].clone()).unwrap();
    let config: ExperimentConfig = serde_json::from_value(json["config"].clone()).unwrap();
    assert_eq!(json["config_hash"], summary.config_hash);

    let csv = fs::read_to_string(tmp.path().join("sigma_p.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), format!("# config_hash={}", summary.config_hash));
    assert_eq!(lines.next().unwrap(), "t,mean,stderr");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), summary.t_grid.len());
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(r, &vec![summary.t_grid[k], summary.sigma_p_mean[k], summary.sigma_p_stderr[k]]);
    }

    let rerun = run_conductivity(&config, 2).unwrap();
    assert_eq!(rerun.summary, summary);

    let measure = fs::read_to_string(tmp.path().join("measure.csv")).unwrap();
    assert_eq!(measure.lines().nth(1).unwrap(), "realization,nu,weight");
    let total: f64 = measure.lines().skip(2).map(|l| l.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total / summary.succeeded as f64 - summary.mass.mean).abs() < 1e-9);
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(run_in(tmp.path(), &[SMALL, &["--beta", "0"]].concat()), 2);
    assert_eq!(run_in(tmp.path(), &["conductivity", "--dim", "3", "--half-side", "12"]), 2);
    assert_eq!(run_in(tmp.path(), &[SMALL, &["--direction", "2"]].concat()), 2);
    assert_eq!(run_in(tmp.path(), &["sweep", "--half-side", "4", "--seeds", "2"]), 2);
    let pulse = tmp.path().join("pulse.json");
    fs::write(&pulse, r#"{"kind": "gaussian", "a": 1.0, "t0": 0.0, "w": 0.5, "support_radius": 2.0, "spatial_norm_sq": 1.0}"#).unwrap();
    assert_eq!(run_in(tmp.path(), &["heat", "--half-side", "4", "--seeds", "2", "--pulse", pulse.to_str().unwrap()]), 2);
    assert!(!tmp.path().join("summary.json").exists());
}

#[test]
fn other_subcommands_write_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path();
    assert_eq!(
        run_in(&p.join("heat"), &["heat", "--half-side", "6", "--seeds", "3", "--tmax", "8", "--tsteps", "400", "--beta", "0.2", "--lambda", "0.5"]),
        0
    );
    let heat: serde_json::Value = serde_json::from_slice(&fs::read(p.join("heat/heat.json")).unwrap()).unwrap();
    assert_eq!(heat["realizations"].as_array().unwrap().len(), 3);

    assert_eq!(run_in(&p.join("sweep"), &["sweep", "--half-side", "5", "--seeds", "3", "--tsteps", "40", "--lambda", "0.5", "--lambda", "0.1"]), 0);
    let sweep: serde_json::Value = serde_json::from_slice(&fs::read(p.join("sweep/sweep.json")).unwrap()).unwrap();
    assert_eq!(sweep["points"].as_array().unwrap().len(), 2);
    assert!(p.join("sweep/point_001/summary.json").exists());

    assert_eq!(run_in(&p.join("drude"), &["drude"]), 0);
    let drude: serde_json::Value = serde_json::from_slice(&fs::read(p.join("drude/drude.json")).unwrap()).unwrap();
    assert!(drude["max_transform_error"].as_f64().unwrap() <= 1e-6);

    assert_eq!(run_in(&p.join("free"), &["free", "--half-side", "3", "--tsteps", "4", "--tmax", "1"]), 0);
    assert_eq!(run_in(&p.join("dyson"), &["dyson"]), 0);
    let dyson: serde_json::Value = serde_json::from_slice(&fs::read(p.join("dyson/dyson.json")).unwrap()).unwrap();
    assert_eq!(dyson["rows"].as_array().unwrap().len(), 6);

    let out = bin().arg("selftest").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn doubling_the_ensemble_shrinks_error_bars() {
    let base = ExperimentConfig { half_side: 8, t_max: 4.0, t_steps: 40, seeds: 100, master_seed: 11, ..Default::default() };
    let a = run_conductivity(&base, 0).unwrap().summary;
    let b = run_conductivity(&ExperimentConfig { seeds: 200, ..base }, 0).unwrap().summary;
    let ratio = |x: &[f64], y: &[f64]| {
        let (sx, sy): (f64, f64) = (x[1..].iter().sum(), y[1..].iter().sum());
        sy / sx
    };
    let r = ratio(&a.sigma_p_stderr, &b.sigma_p_stderr);
    assert!((0.6..=0.85).contains(&r), "{r}");
    let r = b.sigma_d.stderr / a.sigma_d.stderr;
    assert!((0.6..=0.85).contains(&r), "{r}");
}
