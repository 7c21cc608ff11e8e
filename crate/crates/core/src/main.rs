use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use lattice_kubo::continuum::{fermi_symbol_free, free_xi_bz, sigma_d_free, BZGrid};
use lattice_kubo::dyson::{
    chain_laplacian, exact_propagator, op_norm, remainder_bound, truncated_propagator, ExpansionOrder,
};
use lattice_kubo::fields::Pulse;
use lattice_kubo::kubo::{paramagnetic_measure, sigma_d, time_grid, ParamagneticKernel};
use lattice_kubo::lattice::{
    assemble_hamiltonian, sample_disorder, Boundary, DisorderRealization, DisorderSpec, Distribution, LatticeBox,
    Region,
};
use lattice_kubo::measures::{
    drude_cos_transform_quadrature, drude_measure, drude_sigma, FiniteMeasure, UniformGrid,
};
use lattice_kubo::runner::{
    config_hash, run_conductivity, sweep, write_file, write_json, write_outputs, ExperimentConfig, ExperimentKind,
    OutputFormat, SweepAxis,
};
use lattice_kubo::spectral::diagonalize;
use lattice_kubo::{Error, Result};

#[derive(Parser)]
#[command(name = "lattice-kubo", version, about = "Conductivity of the disordered lattice Fermi gas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ensemble averages of σ_p, σ_d and the paramagnetic measure.
    Conductivity(Common),
    /// One ensemble per value of a repeated --lambda, --beta or --half-side.
    Sweep(Common),
    /// Drude reference curves and weak* checks.
    Drude(DrudeArgs),
    /// Free-fermion Brillouin-zone quantities.
    Free(Common),
    /// Heat deposited by a pulse, in time and in frequency.
    Heat(HeatArgs),
    /// Truncated Dyson expansion on a short chain.
    Dyson(DysonArgs),
    /// Quick internal consistency checks.
    Selftest,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long = "half-side", default_values_t = [16])]
    half_side: Vec<usize>,
    #[arg(long, default_value = "periodic")]
    bc: Boundary,
    #[arg(long)]
    padding: Option<usize>,
    #[arg(long, default_values_t = [1.0])]
    beta: Vec<f64>,
    #[arg(long = "lambda", default_values_t = [1.0], allow_negative_numbers = true)]
    lambda: Vec<f64>,
    #[arg(long, default_value = "uniform")]
    dist: Distribution,
    #[arg(long, default_value_t = 20)]
    seeds: usize,
    #[arg(long = "master-seed", default_value_t = 0)]
    master_seed: u64,
    #[arg(long, default_value_t = 10.0)]
    tmax: f64,
    #[arg(long, default_value_t = 400)]
    tsteps: usize,
    #[arg(long, default_value_t = 1)]
    direction: usize,
    #[arg(long, default_value_t = 0.05)]
    bandwidth: f64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, default_value = "both")]
    format: OutputFormat,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl Common {
    fn single<T: Copy>(v: &[T], name: &str) -> Result<T> {
        match v {
            [x] => Ok(*x),
            _ => Err(Error::InvalidParameter(format!("--{name} takes a single value here"))),
        }
    }

    fn config(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            kind,
            dim: self.dim,
            half_side: Self::single(&self.half_side, "half-side")?,
            bc: self.bc,
            padding: self.padding,
            beta: Self::single(&self.beta, "beta")?,
            lambda: Self::single(&self.lambda, "lambda")?,
            distribution: self.dist,
            t_max: self.tmax,
            t_steps: self.tsteps,
            direction: self.direction,
            seeds: self.seeds,
            master_seed: self.master_seed,
            bandwidth: self.bandwidth,
            pulse: None,
        })
    }
}

#[derive(Args)]
struct HeatArgs {
    #[command(flatten)]
    common: Common,
    /// Pulse definition in JSON; the default Gaussian bump otherwise.
    #[arg(long)]
    pulse: Option<PathBuf>,
}

#[derive(Args)]
struct DrudeArgs {
    #[arg(long, default_value_t = 1.0)]
    weight: f64,
    #[arg(long, default_value_t = 1.0)]
    relaxation: f64,
    #[arg(long, default_value_t = 5.0)]
    tmax: f64,
    #[arg(long, default_value_t = 50)]
    tsteps: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct DysonArgs {
    #[arg(long, default_value_t = 8)]
    sites: usize,
    #[arg(long = "lambda", default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    #[arg(long, default_value_t = 0.5)]
    tau: f64,
    #[arg(long, default_value_t = 6)]
    terms: usize,
    #[arg(long, default_value_t = 24)]
    nodes: usize,
    #[arg(long, default_value = "uniform")]
    dist: Distribution,
    #[arg(long = "master-seed", default_value_t = 0)]
    master_seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::TooManySites { .. } | Error::OutsideBox(_) | Error::Json(_) => 2,
        Error::FailureThreshold { .. } | Error::Numerical(_) => 3,
        Error::Io { .. } => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Conductivity(c) => conductivity(&c, None),
        Command::Heat(h) => {
            let pulse = match &h.pulse {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .map_err(|source| Error::Io { path: p.clone(), source })?;
                    serde_json::from_str::<Pulse>(&text)?
                }
                None => Pulse::default(),
            };
            conductivity(&h.common, Some(pulse))
        }
        Command::Sweep(c) => run_sweep(&c),
        Command::Drude(d) => drude(&d),
        Command::Free(c) => free(&c),
        Command::Dyson(d) => dyson(&d),
        Command::Selftest => selftest(),
    }
}

fn conductivity(c: &Common, pulse: Option<Pulse>) -> Result<u8> {
    let kind = if pulse.is_some() { ExperimentKind::Heat } else { ExperimentKind::Conductivity };
    let config = ExperimentConfig { pulse, ..c.config(kind)? };
    let out = run_conductivity(&config, c.jobs)?;
    write_outputs(&out, &c.out, c.format)?;
    let s = &out.summary;
    println!(
        "{} realizations ({} failed), sigma_d = {} ± {}, config {}",
        s.succeeded, s.failed, s.sigma_d.mean, s.sigma_d.stderr, s.config_hash
    );
    if let Some(h) = &s.heat {
        println!("Q_time = {} ± {}, Q_freq = {} ± {}", h.q_time.mean, h.q_time.stderr, h.q_freq.mean, h.q_freq.stderr);
    }
    Ok(0)
}

fn run_sweep(c: &Common) -> Result<u8> {
    let multi = [c.lambda.len() > 1, c.beta.len() > 1, c.half_side.len() > 1];
    let axis = match multi {
        [true, false, false] => SweepAxis::Lambda(c.lambda.clone()),
        [false, true, false] => SweepAxis::Beta(c.beta.clone()),
        [false, false, true] => SweepAxis::HalfSide(c.half_side.clone()),
        _ => {
            return Err(Error::InvalidParameter(
                "repeat exactly one of --lambda, --beta, --half-side to define a sweep".into(),
            ))
        }
    };
    let base = Common { lambda: vec![c.lambda[0]], beta: vec![c.beta[0]], half_side: vec![c.half_side[0]], ..c.clone() }
        .config(ExperimentKind::Conductivity)?;
    let runs = sweep(&base, &axis, c.jobs)?;
    let mut points = Vec::new();
    for (k, r) in runs.iter().enumerate() {
        let dir = c.out.join(format!("point_{k:03}"));
        write_outputs(r, &dir, c.format)?;
        let sup = r.summary.sigma_p_mean.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        points.push(json!({
            "dir": dir.file_name().and_then(|s| s.to_str()),
            "config_hash": r.summary.config_hash,
            "lambda": r.config.lambda,
            "beta": r.config.beta,
            "half_side": r.config.half_side,
            "sup_abs_sigma_p": sup,
            "sigma_d": r.summary.sigma_d,
        }));
        println!("point {k}: sup|sigma_p| = {sup}, config {}", r.summary.config_hash);
    }
    write_json(&c.out, "sweep.json", &json!({ "axis": axis, "points": points }))?;
    Ok(0)
}

fn drude(d: &DrudeArgs) -> Result<u8> {
    let t = time_grid(d.tmax, d.tsteps)?;
    let mut csv = String::from("t,closed_form,quadrature\n");
    let mut worst = 0.0f64;
    for &s in &t {
        let exact = drude_sigma(s, d.weight, d.relaxation);
        let quad = drude_cos_transform_quadrature(s, d.weight, d.relaxation, 1e-11);
        worst = worst.max((exact - quad).abs());
        csv.push_str(&format!("{s},{exact},{quad}\n"));
    }
    write_file(&d.out, "drude.csv", csv.as_bytes())?;
    let grid = UniformGrid::symmetric(50.0, 20001)?;
    let gauss = |nu: f64| (-nu * nu).exp();
    let pairing = |tt: f64| drude_measure(d.weight, tt, &grid).map(|m| m.measure.weak_star_pair(gauss));
    let report = json!({
        "weight": d.weight,
        "relaxation": d.relaxation,
        "max_transform_error": worst,
        "gaussian_pairing": pairing(d.relaxation)?,
        "gaussian_pairing_T_1e3": pairing(1e3)?,
        "gaussian_pairing_T_1e-3": pairing(1e-3)?,
    });
    write_json(&d.out, "drude.json", &report)?;
    println!("max |quadrature − closed form| = {worst:e}");
    Ok(0)
}

#[derive(Serialize)]
struct FreeReport {
    config_hash: String,
    dim: usize,
    beta: f64,
    points_per_axis: usize,
    sigma_d_free: f64,
    fermi_symbol: Vec<(i64, f64)>,
    half_side: usize,
    t: Vec<f64>,
    xi: Option<Vec<f64>>,
}

fn free(c: &Common) -> Result<u8> {
    let beta = Common::single(&c.beta, "beta")?;
    let l = Common::single(&c.half_side, "half-side")?;
    let grid = BZGrid::default_for(c.dim)?;
    let symbol = (0..=10)
        .map(|k| {
            let mut dx = vec![0i64; c.dim];
            dx[0] = k;
            fermi_symbol_free(beta, &dx, &grid).map(|v| (k, v))
        })
        .collect::<Result<Vec<_>>>()?;
    let t = time_grid(c.tmax, c.tsteps)?;
    // the double Brillouin-zone integral is only affordable in one dimension
    let xi = if c.dim == 1 {
        Some(t.iter().map(|&s| free_xi_bz(l, beta, s, &grid)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    let report = FreeReport {
        config_hash: config_hash(&json!({"kind": "free", "dim": c.dim, "beta": beta, "half_side": l,
            "tmax": c.tmax, "tsteps": c.tsteps}))?,
        dim: c.dim,
        beta,
        points_per_axis: grid.points_per_axis(),
        sigma_d_free: sigma_d_free(beta, &grid)?,
        fermi_symbol: symbol,
        half_side: l,
        t,
        xi,
    };
    write_json(&c.out, "free.json", &report)?;
    println!("sigma_d_free = {}", report.sigma_d_free);
    Ok(0)
}

fn dyson(d: &DysonArgs) -> Result<u8> {
    let delta = chain_laplacian(d.sites);
    let chain = LatticeBox::new(1, d.sites / 2, Boundary::Open)?;
    let spec = DisorderSpec { distribution: d.dist, coupling: d.lambda, master_seed: d.master_seed };
    let mut v = sample_disorder(&spec, &chain, 0).values;
    v.truncate(d.sites);
    v.resize(d.sites, 0.0);
    let potential: Vec<f64> = v.iter().map(|x| d.lambda * x).collect();
    let exact = exact_propagator(&delta, &potential, d.tau)?;
    let norm = op_norm(&delta.map(|x| num_complex::Complex64::new(x, 0.0)));
    let mut rows = Vec::new();
    for n in 1..=d.terms {
        let psi = truncated_propagator(&delta, &potential, 0.0, d.tau, ExpansionOrder::new(n, d.nodes)?)?;
        let err = op_norm(&(psi - &exact));
        let bound = remainder_bound(norm, d.tau, n);
        let generic = remainder_bound(4.0, d.tau, n);
        println!("N = {n}: error {err:e}, bound {bound:e}");
        rows.push(json!({"terms": n, "error": err, "bound": bound, "bound_4d": generic}));
    }
    write_json(&d.out, "dyson.json", &json!({"sites": d.sites, "lambda": d.lambda, "tau": d.tau, "delta_norm": norm, "rows": rows}))?;
    Ok(0)
}

fn check(name: &str, ok: bool, detail: String) -> bool {
    println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    ok
}

fn selftest() -> Result<u8> {
    let mut all = true;

    let torus = LatticeBox::new(1, 16, Boundary::Periodic)?;
    let eig = diagonalize(&assemble_hamiltonian(&torus, &DisorderRealization::from_values(vec![0.0; 33]), 0.0)?)?;
    let region = Region::full(torus);
    let kernel = ParamagneticKernel::new(&eig, 1.0, &region, 1)?;
    let worst = (0..=10).map(|k| kernel.xi(0.5 * k as f64).abs()).fold(0.0, f64::max);
    all &= check("free torus nullity", worst <= 1e-10, format!("max |Xi| = {worst:e}"));

    let sd = sigma_d(&eig, 1.0, &region, 1)?;
    let free = sigma_d_free(1.0, &BZGrid::default_for(1)?)?;
    all &= check("diamagnetic constant", (sd - free).abs() <= 1e-6, format!("{sd} vs {free}"));

    let region = Region::padded(1, 8, 8)?;
    let spec = DisorderSpec { distribution: Distribution::Uniform, coupling: 1.0, master_seed: 7 };
    let h = assemble_hamiltonian(region.outer(), &sample_disorder(&spec, region.outer(), 0), 1.0)?;
    let eig = diagonalize(&h)?;
    let kernel = ParamagneticKernel::new(&eig, 1.0, &region, 1)?;
    let mu = paramagnetic_measure(&eig, 1.0, &region, 1)?.measure;
    let defect = (0..=20)
        .map(|k| {
            let t = 0.5 * k as f64;
            (kernel.xi(t) - mu.integrate(|nu| (t * nu).cos() - 1.0)).abs()
        })
        .fold(0.0, f64::max);
    all &= check("time-frequency consistency", defect <= 1e-9, format!("max defect {defect:e}"));

    let drude = (0..=10)
        .map(|k| {
            let t = 0.5 * k as f64;
            (drude_cos_transform_quadrature(t, 1.0, 1.0, 1e-11) - drude_sigma(t, 1.0, 1.0)).abs()
        })
        .fold(0.0, f64::max);
    all &= check("Drude transform", drude <= 1e-6, format!("max error {drude:e}"));

    let delta = chain_laplacian(8);
    let potential = [0.3, -0.7, 0.1, 0.9, -0.4, 0.5, -0.2, 0.8];
    let exact = exact_propagator(&delta, &potential, 0.5)?;
    let psi = truncated_propagator(&delta, &potential, 0.0, 0.5, ExpansionOrder::new(6, 24)?)?;
    let err = op_norm(&(psi - exact));
    let bound = remainder_bound(4.0, 0.5, 6);
    all &= check("Dyson remainder", err <= bound, format!("{err:e} <= {bound:e}"));

    Ok(if all { 0 } else { 3 })
}
