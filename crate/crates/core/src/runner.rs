//! Disorder ensembles: configuration, parallel execution over realizations,
//! deterministic aggregation and output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{invalid, Error, Result};
use crate::fields::{heat_production, HeatRecord, Pulse};
use crate::kubo::{sigma_d, time_grid, CurveKind, ParamagneticKernel, TransportCurve};
use crate::lattice::{
    assemble_hamiltonian, default_padding, sample_disorder, Boundary, DisorderSpec, Distribution, LatticeBox,
    Region,
};
use crate::measures::{mollify, AtomicMeasure, FiniteMeasure, UniformGrid};
use crate::spectral::diagonalize;

/// Largest tolerated share of failed realizations.
pub const MAX_FAILURE_FRACTION: f64 = 0.05;
/// Points of the frequency grid of the mollified density.
pub const DENSITY_POINTS: usize = 401;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Conductivity,
    SweepLambda,
    SweepBeta,
    SweepVolume,
    Drude,
    Free,
    Heat,
    Dyson,
}

/// Everything that determines an ensemble run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub dim: usize,
    /// Half side `l` of the averaging box `Λ_l`.
    pub half_side: usize,
    pub bc: Boundary,
    /// Extra layers around `Λ_l` for open boxes; `None` picks
    /// [`default_padding`]. Ignored for periodic boxes.
    pub padding: Option<usize>,
    pub beta: f64,
    pub lambda: f64,
    pub distribution: Distribution,
    pub t_max: f64,
    pub t_steps: usize,
    /// 1-based.
    pub direction: usize,
    pub seeds: usize,
    pub master_seed: u64,
    /// Gaussian bandwidth of the mollified density.
    pub bandwidth: f64,
    pub pulse: Option<Pulse>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kind: ExperimentKind::Conductivity,
            dim: 1,
            half_side: 16,
            bc: Boundary::Periodic,
            padding: None,
            beta: 1.0,
            lambda: 1.0,
            distribution: Distribution::Uniform,
            t_max: 10.0,
            t_steps: 400,
            direction: 1,
            seeds: 20,
            master_seed: 0,
            bandwidth: 0.05,
            pulse: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(invalid(format!("beta must be positive, got {}", self.beta)));
        }
        if !self.lambda.is_finite() {
            return Err(invalid("lambda must be finite"));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) || self.t_steps == 0 {
            return Err(invalid("need t_max > 0 and at least one time step"));
        }
        if self.seeds == 0 {
            return Err(invalid("need at least one realization"));
        }
        if !(self.bandwidth > 0.0) {
            return Err(invalid("bandwidth must be positive"));
        }
        if self.direction == 0 || self.direction > self.dim {
            return Err(invalid(format!("direction {} not in 1..={}", self.direction, self.dim)));
        }
        if let Some(p) = &self.pulse {
            p.validate()?;
        }
        self.region()?;
        Ok(())
    }

    /// Computation box and averaging box.
    pub fn region(&self) -> Result<Region> {
        match self.bc {
            Boundary::Periodic => Ok(Region::full(LatticeBox::new(self.dim, self.half_side, Boundary::Periodic)?)),
            Boundary::Open => {
                let pad = self.padding.unwrap_or_else(|| default_padding(self.t_max));
                Region::padded(self.dim, self.half_side, pad)
            }
        }
    }

    pub fn t_grid(&self) -> Result<Vec<f64>> {
        time_grid(self.t_max, self.t_steps)
    }

    pub fn disorder(&self) -> DisorderSpec {
        DisorderSpec { distribution: self.distribution, coupling: self.lambda, master_seed: self.master_seed }
    }

    /// Symmetric frequency window holding every Bohr frequency plus five
    /// bandwidths.
    pub fn density_grid(&self) -> Result<UniformGrid> {
        let reach = 4.0 * self.dim as f64 + 2.0 * self.lambda.abs() + 5.0 * self.bandwidth;
        UniformGrid::symmetric(reach, DENSITY_POINTS)
    }
}

/// First 8 bytes of SHA-256 over the canonical JSON of `value` (object keys
/// sorted), as 16 hex digits.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let canonical = serde_json::to_vec(&serde_json::to_value(value)?)?;
    let digest = Sha256::digest(&canonical);
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

/// Results of one disorder realization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: u64,
    pub seed: u64,
    pub sigma_p: Vec<f64>,
    pub sigma_d: f64,
    pub measure: AtomicMeasure,
    /// `μ_{p,l}(ℝ)`.
    pub mass: f64,
    /// `∫(1 + |ν|) dμ_{p,l}`.
    pub abs_first_moment: f64,
    /// `σ_d − μ_{p,l}(ℝ)`.
    pub zero_atom: f64,
    pub heat: Option<HeatRecord>,
}

/// Runs realization `index` of `config`.
pub fn realize(config: &ExperimentConfig, index: u64) -> Result<RealizationRecord> {
    let region = config.region()?;
    let outer = region.outer();
    let draw = sample_disorder(&config.disorder(), outer, index);
    let h = assemble_hamiltonian(outer, &draw, config.lambda)?;
    let eig = diagonalize(&h)?;
    let t_grid = config.t_grid()?;
    let kernel = ParamagneticKernel::new(&eig, config.beta, &region, config.direction)?;
    let curve = kernel.curve(&t_grid, CurveKind::SigmaP);
    let sd = sigma_d(&eig, config.beta, &region, config.direction)?;
    let measure = kernel.measure()?.measure;
    let heat = match &config.pulse {
        Some(p) => Some(heat_production(&curve, sd, &measure, p)?),
        None => None,
    };
    let mass = measure.total_mass();
    Ok(RealizationRecord {
        index,
        seed: draw.derived_seed,
        sigma_p: curve.values,
        sigma_d: sd,
        abs_first_moment: measure.abs_first_moment(),
        zero_atom: sd - mass,
        mass,
        measure,
        heat,
    })
}

/// Neumaier-compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut c) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Sample mean and standard error `std/√n` (zero for a single sample).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let n = values.len();
        if n == 0 {
            return Stat { mean: f64::NAN, stderr: f64::NAN };
        }
        let mean = compensated_sum(values.iter().copied()) / n as f64;
        if n == 1 {
            return Stat { mean, stderr: 0.0 };
        }
        let var = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1) as f64;
        Stat { mean, stderr: (var / n as f64).sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub nu: Vec<f64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSummary {
    pub q_time: Stat,
    pub q_freq: Stat,
    pub q_diamagnetic: Stat,
    pub max_time_freq_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub config_hash: String,
    pub requested: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub t_grid: Vec<f64>,
    pub sigma_p_mean: Vec<f64>,
    pub sigma_p_stderr: Vec<f64>,
    pub sigma_d: Stat,
    pub mass: Stat,
    pub abs_first_moment: Stat,
    pub zero_atom: Stat,
    pub density: DensitySummary,
    pub heat: Option<HeatSummary>,
}

impl EnsembleSummary {
    pub fn sigma_p_curve(&self) -> TransportCurve {
        TransportCurve { kind: CurveKind::SigmaP, t_grid: self.t_grid.clone(), values: self.sigma_p_mean.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub config: ExperimentConfig,
    pub summary: EnsembleSummary,
    pub records: Vec<RealizationRecord>,
}

/// Runs every realization of `config` on `jobs` threads (0: rayon default)
/// and aggregates the results in realization order.
pub fn run_conductivity(config: &ExperimentConfig, jobs: usize) -> Result<RunOutput> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<RealizationRecord>> =
        pool.install(|| (0..config.seeds as u64).into_par_iter().map(|i| realize(config, i)).collect());
    let mut records = Vec::with_capacity(results.len());
    let mut failed = 0;
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(Error::Numerical(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    if failed as f64 > MAX_FAILURE_FRACTION * config.seeds as f64 {
        return Err(Error::FailureThreshold { failed, requested: config.seeds });
    }
    let summary = aggregate(config, &records, failed)?;
    Ok(RunOutput { config: config.clone(), summary, records })
}

fn aggregate(config: &ExperimentConfig, records: &[RealizationRecord], failed: usize) -> Result<EnsembleSummary> {
    let t_grid = config.t_grid()?;
    let column = |f: &dyn Fn(&RealizationRecord) -> f64| Stat::of(&records.iter().map(f).collect::<Vec<_>>());
    let curve: Vec<Stat> = (0..t_grid.len()).map(|k| column(&|r| r.sigma_p[k])).collect();
    let grid = config.density_grid()?;
    let densities = records
        .iter()
        .map(|r| mollify(&r.measure, config.bandwidth, &grid).map(|d| d.density))
        .collect::<Result<Vec<_>>>()?;
    let dens: Vec<Stat> =
        (0..grid.len).map(|k| Stat::of(&densities.iter().map(|d| d[k]).collect::<Vec<_>>())).collect();
    let heat = if config.pulse.is_some() {
        let hs: Vec<&HeatRecord> = records.iter().filter_map(|r| r.heat.as_ref()).collect();
        let stat = |f: &dyn Fn(&HeatRecord) -> f64| Stat::of(&hs.iter().map(|h| f(h)).collect::<Vec<_>>());
        Some(HeatSummary {
            q_time: stat(&|h| h.q_time),
            q_freq: stat(&|h| h.q_freq),
            q_diamagnetic: stat(&|h| h.q_diamagnetic),
            max_time_freq_defect: hs.iter().map(|h| (h.q_time - h.q_freq).abs()).fold(0.0, f64::max),
        })
    } else {
        None
    };
    Ok(EnsembleSummary {
        config_hash: config_hash(config)?,
        requested: config.seeds,
        succeeded: records.len(),
        failed,
        sigma_p_mean: curve.iter().map(|s| s.mean).collect(),
        sigma_p_stderr: curve.iter().map(|s| s.stderr).collect(),
        t_grid,
        sigma_d: column(&|r| r.sigma_d),
        mass: column(&|r| r.mass),
        abs_first_moment: column(&|r| r.abs_first_moment),
        zero_atom: column(&|r| r.zero_atom),
        density: DensitySummary {
            nu: grid.points().collect(),
            mean: dens.iter().map(|s| s.mean).collect(),
            stderr: dens.iter().map(|s| s.stderr).collect(),
        },
        heat,
    })
}

/// Which parameter a sweep varies. All points share the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Lambda(Vec<f64>),
    Beta(Vec<f64>),
    HalfSide(Vec<usize>),
}

/// One ensemble run per sweep point.
pub fn sweep(base: &ExperimentConfig, axis: &SweepAxis, jobs: usize) -> Result<Vec<RunOutput>> {
    let configs: Vec<ExperimentConfig> = match axis {
        SweepAxis::Lambda(v) => v
            .iter()
            .map(|&x| ExperimentConfig { lambda: x, kind: ExperimentKind::SweepLambda, ..base.clone() })
            .collect(),
        SweepAxis::Beta(v) => {
            v.iter().map(|&x| ExperimentConfig { beta: x, kind: ExperimentKind::SweepBeta, ..base.clone() }).collect()
        }
        SweepAxis::HalfSide(v) => v
            .iter()
            .map(|&x| ExperimentConfig { half_side: x, kind: ExperimentKind::SweepVolume, ..base.clone() })
            .collect(),
    };
    if configs.is_empty() {
        return Err(invalid("sweep needs at least one point"));
    }
    configs.iter().map(|c| run_conductivity(c, jobs)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// `c₂` in `σ_p(t) ≈ −c₂t²`.
    pub c2: f64,
    /// Root mean square residual of the fit.
    pub residual: f64,
    pub points: usize,
}

/// Least squares fit of `−σ_p(t) = c₂t²` over `0 ≤ t ≤ window`.
pub fn fit_small_t_quadratic(curve: &TransportCurve, window: f64) -> Result<QuadraticFit> {
    let pts: Vec<(f64, f64)> = curve
        .t_grid
        .iter()
        .zip(&curve.values)
        .filter(|(t, _)| t.abs() <= window)
        .map(|(t, v)| (t * t, -v))
        .collect();
    let den = compensated_sum(pts.iter().map(|(x, _)| x * x));
    if pts.len() < 2 || den == 0.0 {
        return Err(invalid("fit window holds fewer than two non-zero times"));
    }
    let c2 = compensated_sum(pts.iter().map(|(x, y)| x * y)) / den;
    let ss = compensated_sum(pts.iter().map(|(x, y)| (y - c2 * x).powi(2)));
    Ok(QuadraticFit { c2, residual: (ss / pts.len() as f64).sqrt(), points: pts.len() })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(invalid(format!("unknown format {other:?}"))),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write_file(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_file(dir, name, &bytes)
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    config_hash: &'a str,
    config: &'a ExperimentConfig,
    summary: &'a EnsembleSummary,
}

#[derive(Serialize)]
struct HeatFile<'a> {
    config_hash: &'a str,
    summary: &'a HeatSummary,
    realizations: Vec<&'a HeatRecord>,
}

/// `sigma_p.csv`, `measure.csv` and `measure_density.csv` for the CSV
/// format, `summary.json` (and `heat.json` when a pulse is set) for JSON.
pub fn write_outputs(out: &RunOutput, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let s = &out.summary;
    let hash = &s.config_hash;
    let mut written = Vec::new();
    if matches!(format, OutputFormat::Csv | OutputFormat::Both) {
        let mut buf = Vec::new();
        let w = &mut buf;
        let e = |r: std::io::Result<()>| r.map_err(|e| invalid(e.to_string()));
        e(writeln!(w, "# config_hash={hash}"))?;
        e(writeln!(w, "t,mean,stderr"))?;
        for k in 0..s.t_grid.len() {
            e(writeln!(w, "{},{},{}", s.t_grid[k], s.sigma_p_mean[k], s.sigma_p_stderr[k]))?;
        }
        written.push(write_file(dir, "sigma_p.csv", &buf)?);

        let mut buf = Vec::new();
        let w = &mut buf;
        e(writeln!(w, "# config_hash={hash}"))?;
        e(writeln!(w, "realization,nu,weight"))?;
        for r in &out.records {
            for (nu, wt) in r.measure.atoms() {
                e(writeln!(w, "{},{},{}", r.index, nu, wt))?;
            }
        }
        written.push(write_file(dir, "measure.csv", &buf)?);

        let mut buf = Vec::new();
        let w = &mut buf;
        e(writeln!(w, "# config_hash={hash}"))?;
        e(writeln!(w, "nu,density,stderr"))?;
        for k in 0..s.density.nu.len() {
            e(writeln!(w, "{},{},{}", s.density.nu[k], s.density.mean[k], s.density.stderr[k]))?;
        }
        written.push(write_file(dir, "measure_density.csv", &buf)?);
    }
    if matches!(format, OutputFormat::Json | OutputFormat::Both) {
        written.push(write_json(dir, "summary.json", &SummaryFile { config_hash: hash, config: &out.config, summary: s })?);
        if let Some(h) = &s.heat {
            let file = HeatFile {
                config_hash: hash,
                summary: h,
                realizations: out.records.iter().filter_map(|r| r.heat.as_ref()).collect(),
            };
            written.push(write_json(dir, "heat.json", &file)?);
        }
    }
    Ok(written)
}
