//! The free (`λ = 0`) system in infinite volume: dispersion relation and
//! Brillouin-zone quadratures.

use std::f64::consts::PI;

use crate::correlators::duhamel_pair_weight;
use crate::error::{invalid, Result};
use crate::spectral::{check_beta, occupation};

/// Uniform tensor grid on `[−π, π)^d` with `points` nodes per axis and equal
/// (periodic trapezoid) weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BZGrid {
    dim: usize,
    points: usize,
}

impl BZGrid {
    pub fn new(dim: usize, points: usize) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(invalid(format!("Brillouin-zone grids need 1 ≤ d ≤ 3, got {dim}")));
        }
        if points < 2 || points % 2 == 1 {
            return Err(invalid(format!("points per axis must be even and ≥ 2, got {points}")));
        }
        Ok(BZGrid { dim, points })
    }

    /// 512, 128 and 48 points per axis in d = 1, 2, 3.
    pub fn default_for(dim: usize) -> Result<Self> {
        let m = match dim {
            1 => 512,
            2 => 128,
            3 => 48,
            _ => return Err(invalid(format!("Brillouin-zone grids need 1 ≤ d ≤ 3, got {dim}"))),
        };
        BZGrid::new(dim, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Weight of every node; the weights sum to `(2π)^d`.
    pub fn weight(&self) -> f64 {
        (2.0 * PI / self.points as f64).powi(self.dim as i32)
    }

    pub fn axis_nodes(&self) -> Vec<f64> {
        let h = 2.0 * PI / self.points as f64;
        (0..self.points).map(|k| -PI + k as f64 * h).collect()
    }

    /// Calls `f` on every node, first axis fastest.
    pub fn for_each(&self, mut f: impl FnMut(&[f64])) {
        let axis = self.axis_nodes();
        let mut idx = vec![0usize; self.dim];
        let mut p: Vec<f64> = vec![axis[0]; self.dim];
        for _ in 0..self.len() {
            f(&p);
            for a in 0..self.dim {
                idx[a] += 1;
                if idx[a] < self.points {
                    p[a] = axis[idx[a]];
                    break;
                }
                idx[a] = 0;
                p[a] = axis[0];
            }
        }
    }

    /// `Σ_p w·f(p)`.
    pub fn integrate(&self, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut total = 0.0;
        self.for_each(|p| total += f(p));
        total * self.weight()
    }
}

/// `E(p) = 2[d − Σ_j cos p_j]`.
pub fn dispersion(p: &[f64]) -> f64 {
    2.0 * p.iter().map(|x| 1.0 - x.cos()).sum::<f64>()
}

/// `∇E(p) = 2 sin p`.
pub fn dispersion_gradient(p: &[f64]) -> Vec<f64> {
    p.iter().map(|x| 2.0 * x.sin()).collect()
}

/// `(2π)^{−d} ∫ e^{−ip·Δx} (1 + e^{βE(p)})^{−1} dp`.
pub fn fermi_symbol_free(beta: f64, dx: &[i64], grid: &BZGrid) -> Result<f64> {
    check_beta(beta)?;
    if dx.len() != grid.dim() {
        return Err(invalid("displacement dimension differs from the grid dimension"));
    }
    let norm = (2.0 * PI).powi(grid.dim() as i32);
    Ok(grid.integrate(|p| {
        let phase: f64 = p.iter().zip(dx).map(|(a, &b)| a * b as f64).sum();
        phase.cos() * occupation(dispersion(p), beta)
    }) / norm)
}

/// `2(2π)^{−d} ∫ cos(p₁) (1 + e^{βE(p)})^{−1} dp`.
pub fn sigma_d_free(beta: f64, grid: &BZGrid) -> Result<f64> {
    check_beta(beta)?;
    let norm = (2.0 * PI).powi(grid.dim() as i32);
    Ok(2.0 * grid.integrate(|p| p[0].cos() * occupation(dispersion(p), beta)) / norm)
}

/// `𝔡_t(p) = 2(2π)^{−2d} ∫ K(E₋, E₊) cos(t(E₋ − E₊)) (1 − cos 2p′₁) dp′`
/// with `E_± = E(p′ ± p/2)` and `K` the Duhamel pair weight.
pub fn d_t_kernel(p: &[f64], beta: f64, t: f64, grid: &BZGrid) -> Result<f64> {
    check_beta(beta)?;
    if p.len() != grid.dim() {
        return Err(invalid("momentum dimension differs from the grid dimension"));
    }
    let d = grid.dim();
    let mut minus = vec![0.0; d];
    let mut plus = vec![0.0; d];
    let v = grid.integrate(|q| {
        for j in 0..d {
            minus[j] = q[j] - 0.5 * p[j];
            plus[j] = q[j] + 0.5 * p[j];
        }
        let (em, ep) = (dispersion(&minus), dispersion(&plus));
        duhamel_pair_weight(em, ep, beta) * (t * (em - ep)).cos() * (1.0 - (2.0 * q[0]).cos())
    });
    Ok(2.0 * v / (2.0 * PI).powi(2 * d as i32))
}

/// `δ_l(p) = |Λ_l|^{−1} |Σ_{x∈Λ_l} e^{ip·x}|²`.
pub fn fejer_weight(l: usize, p: &[f64]) -> f64 {
    let side = (2 * l + 1) as f64;
    p.iter()
        .map(|&x| {
            let s = 1.0 + 2.0 * (1..=l).map(|k| (x * k as f64).cos()).sum::<f64>();
            s * s / side
        })
        .product()
}

/// `∫ δ_l(p) dp` over the grid.
pub fn fejer_integral(l: usize, grid: &BZGrid) -> f64 {
    grid.integrate(|p| fejer_weight(l, p))
}

/// `∫ δ_l(p) (𝔡_t(p) − 𝔡_0(p)) dp`, the paramagnetic coefficient of the
/// free system restricted to `Λ_l`.
pub fn free_xi_bz(l: usize, beta: f64, t: f64, grid: &BZGrid) -> Result<f64> {
    check_beta(beta)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let mut err = None;
    let v = grid.integrate(|p| {
        let delta = fejer_weight(l, p);
        match (d_t_kernel(p, beta, t, grid), d_t_kernel(p, beta, 0.0, grid)) {
            (Ok(a), Ok(b)) => delta * (a - b),
            (Err(e), _) | (_, Err(e)) => {
                err = Some(e);
                0.0
            }
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}
