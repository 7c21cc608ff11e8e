//! Transport coefficients of one disorder realization: the paramagnetic
//! coefficient `Ξ`, the diamagnetic constant `σ_d`, the conductivity `Σ`
//! and the conductivity measures.
//!
//! With `A = P₁ᵀP₂ − P₂ᵀP₁`, where `P₁`, `P₂` hold the eigenvector rows at
//! the two ends of the bonds `(x, x − e_k)`, `x ∈ Λ_l`, the paramagnetic
//! coefficient is
//!
//! `Ξ(t) = |Λ_l|⁻¹ Σ_{ij} A_ij² K_ij (cos(t(E_i − E_j)) − 1)`
//!
//! where `K_ij` is the Duhamel pair weight. The measure `μ_{p,l}` therefore
//! puts mass `|Λ_l|⁻¹ A_ij² K_ij` on each Bohr frequency `E_i − E_j`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::correlators::duhamel_weights;
use crate::dense;
use crate::error::{invalid, Result};
use crate::lattice::{axis_of, Region};
use crate::measures::{AtomicMeasure, FiniteMeasure};
use crate::spectral::{check_beta, occupation, EigenSystem};

/// Frequencies closer than this are merged into one atom.
pub const BIN_WIDTH: f64 = 1e-10;
/// Zero-frequency tolerance relative to the spectral width.
pub const ZERO_TOL_REL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveKind {
    XiParamagnetic,
    SigmaP,
    SigmaInPhase,
}

/// A sampled even function of time, stored for `t ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportCurve {
    pub kind: CurveKind,
    pub t_grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl TransportCurve {
    /// Value at `|t|`, linearly interpolated between grid points. Times
    /// beyond the grid are rejected.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let s = t.abs();
        let g = &self.t_grid;
        let last = *g.last().ok_or_else(|| invalid("empty curve"))?;
        if s > last || s < g[0] {
            return Err(invalid(format!("time {t} outside the curve grid [{}, {last}]", g[0])));
        }
        let k = g.partition_point(|&x| x <= s);
        if k == 0 {
            return Ok(self.values[0]);
        }
        let i = k - 1;
        if g[i] == s || i + 1 == g.len() {
            return Ok(self.values[i]);
        }
        let f = (s - g[i]) / (g[i + 1] - g[i]);
        Ok(self.values[i] * (1.0 - f) + self.values[i + 1] * f)
    }

    /// Step of a uniform grid starting at zero, if the grid is one.
    pub fn uniform_step(&self) -> Option<f64> {
        let g = &self.t_grid;
        if g.len() < 2 || g[0] != 0.0 {
            return None;
        }
        let h = g[1] - g[0];
        let ok = g.iter().enumerate().all(|(k, &t)| (t - k as f64 * h).abs() <= 1e-12 * t.abs().max(1.0));
        ok.then_some(h)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    MuPL,
    MuSigma,
    MuAc,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConductivityMeasure {
    pub kind: MeasureKind,
    pub measure: AtomicMeasure,
    /// Weight added at frequency zero (only for `mu_sigma`).
    pub zero_atom: Option<f64>,
}

/// `t = 0, h, …, t_max` with `steps` intervals.
pub fn time_grid(t_max: f64, steps: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0) || steps == 0 {
        return Err(invalid("time grid needs t_max > 0 and at least one step"));
    }
    Ok((0..=steps).map(|k| t_max * k as f64 / steps as f64).collect())
}

/// Pair data of `Ξ` for one realization and direction, from which the
/// coefficient at any time and the measure `μ_{p,l}` follow.
#[derive(Clone, Debug)]
pub struct ParamagneticKernel {
    /// `E_j − E_i ≥ 0` for `i < j`.
    freqs: Vec<f64>,
    /// Weight of each of the two atoms `±(E_j − E_i)`.
    weights: Vec<f64>,
    zero_tol: f64,
}

/// `A = P₁ᵀP₂ − P₂ᵀP₁` for the bonds of `region` in `direction`.
pub fn bond_overlap(eig: &EigenSystem, region: &Region, direction: usize) -> Result<DMatrix<f64>> {
    let bonds = region.bonds(direction)?;
    let n = eig.len();
    let m = bonds.len();
    let phi = &eig.vectors;
    let p1 = DMatrix::from_fn(m, n, |b, i| phi[(bonds[b].0, i)]);
    let p2 = DMatrix::from_fn(m, n, |b, i| phi[(bonds[b].1, i)]);
    let c = dense::gemm(&p1, true, &p2, false);
    Ok(&c - c.transpose())
}

impl ParamagneticKernel {
    pub fn new(eig: &EigenSystem, beta: f64, region: &Region, direction: usize) -> Result<Self> {
        check_beta(beta)?;
        let a = bond_overlap(eig, region, direction)?;
        let k = duhamel_weights(eig, beta);
        let vol = region.inner_volume() as f64;
        let n = eig.len();
        let e = &eig.energies;
        let mut freqs = Vec::with_capacity(n * (n - 1) / 2);
        let mut weights = Vec::with_capacity(n * (n - 1) / 2);
        for j in 0..n {
            for i in 0..j {
                let w = a[(i, j)] * a[(i, j)] * k[(i, j)] / vol;
                freqs.push(e[j] - e[i]);
                weights.push(w);
            }
        }
        Ok(ParamagneticKernel { freqs, weights, zero_tol: ZERO_TOL_REL * eig.width() })
    }

    /// `Ξ(t)`.
    pub fn xi(&self, t: f64) -> f64 {
        2.0 * self.freqs.iter().zip(&self.weights).map(|(nu, w)| w * ((t * nu).cos() - 1.0)).sum::<f64>()
    }

    /// `Ξ(0⁺)`-curvature data: `∫ν²dμ`.
    pub fn second_moment(&self) -> f64 {
        2.0 * self.freqs.iter().zip(&self.weights).map(|(nu, w)| w * nu * nu).sum::<f64>()
    }

    /// `(I, I)_{𝓘,l}`, the total mass of `μ_{p,l}`.
    pub fn auto_correlation(&self) -> f64 {
        2.0 * self.weights.iter().sum::<f64>()
    }

    pub fn zero_tolerance(&self) -> f64 {
        self.zero_tol
    }

    pub fn curve(&self, t_grid: &[f64], kind: CurveKind) -> TransportCurve {
        TransportCurve { kind, t_grid: t_grid.to_vec(), values: t_grid.iter().map(|&t| self.xi(t)).collect() }
    }

    /// `μ_{p,l}`: atoms at `±(E_j − E_i)`, merged within [`BIN_WIDTH`] on the
    /// positive side and mirrored so that the result is exactly symmetric.
    pub fn measure(&self) -> Result<ConductivityMeasure> {
        let positive = AtomicMeasure::new(self.freqs.iter().copied().zip(self.weights.iter().copied()).collect())?;
        let binned = positive.binned(BIN_WIDTH);
        let mut atoms = Vec::with_capacity(2 * binned.len());
        for &(nu, w) in binned.atoms() {
            atoms.push((nu, w));
            atoms.push((-nu, w));
        }
        Ok(ConductivityMeasure { kind: MeasureKind::MuPL, measure: AtomicMeasure::new(atoms)?, zero_atom: None })
    }
}

/// `Ξ_{p,l}(t)` in direction `k` (1-based).
pub fn xi_paramagnetic(eig: &EigenSystem, beta: f64, region: &Region, direction: usize, t: f64) -> Result<f64> {
    Ok(ParamagneticKernel::new(eig, beta, region, direction)?.xi(t))
}

/// The atomic measure `μ_{p,l}` with `Ξ(t) = ∫(cos(tν) − 1) μ_{p,l}(dν)`.
pub fn paramagnetic_measure(
    eig: &EigenSystem,
    beta: f64,
    region: &Region,
    direction: usize,
) -> Result<ConductivityMeasure> {
    ParamagneticKernel::new(eig, beta, region, direction)?.measure()
}

/// `σ_p` sampled on `t_grid`.
pub fn sigma_p(
    eig: &EigenSystem,
    beta: f64,
    region: &Region,
    direction: usize,
    t_grid: &[f64],
) -> Result<TransportCurve> {
    Ok(ParamagneticKernel::new(eig, beta, region, direction)?.curve(t_grid, CurveKind::SigmaP))
}

/// `σ_d = 2·|Λ_l|⁻¹ Σ_{x∈Λ_l} ⟨e_{x+e_k}, d e_x⟩`.
pub fn sigma_d(eig: &EigenSystem, beta: f64, region: &Region, direction: usize) -> Result<f64> {
    check_beta(beta)?;
    let outer = region.outer();
    let axis = axis_of(direction, outer.dim())?;
    let occ: Vec<f64> = eig.energies.iter().map(|&e| occupation(e, beta)).collect();
    let phi = &eig.vectors;
    let mut total = 0.0;
    for x in region.inner_sites() {
        let y = outer
            .shift(x, axis, 1)
            .ok_or_else(|| invalid("inner box touches the boundary of an open box"))?;
        total += (0..eig.len()).map(|i| phi[(y, i)] * phi[(x, i)] * occ[i]).sum::<f64>();
    }
    Ok(2.0 * total / region.inner_volume() as f64)
}

/// `Σ(t)`: zero for `t < 0` and `σ_d + σ_p(t)` for `t ≥ 0`.
pub fn conductivity_sigma(sigma_p: &TransportCurve, sigma_d: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return Ok(0.0);
    }
    Ok(sigma_d + sigma_p.value_at(t)?)
}

/// `σ(t) = σ_p(t) + σ_d`.
pub fn in_phase_conductivity(sigma_p: &TransportCurve, sigma_d: f64) -> TransportCurve {
    TransportCurve {
        kind: CurveKind::SigmaInPhase,
        t_grid: sigma_p.t_grid.clone(),
        values: sigma_p.values.iter().map(|v| v + sigma_d).collect(),
    }
}

/// `μ_Σ = μ_p + (σ_d − μ_p(ℝ))·δ₀`.
pub fn full_measure(mu_p: &ConductivityMeasure, sigma_d: f64) -> ConductivityMeasure {
    let zero = sigma_d - mu_p.measure.total_mass();
    let mut atoms = mu_p.measure.atoms().to_vec();
    atoms.push((0.0, zero));
    ConductivityMeasure { kind: MeasureKind::MuSigma, measure: AtomicMeasure::signed(atoms), zero_atom: Some(zero) }
}

/// `μ_AC`: `μ_p` without the atoms with `|ν| ≤ zero_tol`.
pub fn ac_measure(mu_p: &ConductivityMeasure, zero_tol: f64) -> Result<ConductivityMeasure> {
    let atoms = mu_p.measure.atoms().iter().copied().filter(|(nu, _)| nu.abs() > zero_tol).collect();
    Ok(ConductivityMeasure { kind: MeasureKind::MuAc, measure: AtomicMeasure::new(atoms)?, zero_atom: None })
}
