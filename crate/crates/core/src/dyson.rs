//! Truncated Dyson expansion of `e^{−i(t−ν)(Δ + λV)}` around the diagonal
//! potential, and disorder averages of products of random phases.
//!
//! With `D(s) = e^{−i(s−ν)λV}` the terms obey `R₀(s) = D(s)` and
//!
//! `R_n(s) = D(s) ∫_ν^s D(u)^{−1} Δ R_{n−1}(u) du`,
//!
//! and `ψ_{ν,t,N} = Σ_{n<N} (−i)^n R_n(t)`. Every `R_n` is entire in `s`, so
//! the nested integrals are carried out by Gauss–Legendre collocation: the
//! iterates are kept at the `M` nodes on `[ν, t]` and integrated with the
//! spectral integration matrix of the rule.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lattice::Distribution;
use crate::quad::{gauss_legendre, legendre_table};
use crate::spectral::{diagonalize, propagator};

/// Largest `|t − ν|` accepted by [`truncated_propagator`].
pub const DEFAULT_TIME_CAP: f64 = 4.0;
pub const MAX_TERMS: usize = 8;
pub const MIN_NODES: usize = 8;

/// `terms` retained terms, `nodes` collocation nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionOrder {
    pub terms: usize,
    pub nodes: usize,
}

impl ExpansionOrder {
    pub fn new(terms: usize, nodes: usize) -> Result<Self> {
        if !(1..=MAX_TERMS).contains(&terms) {
            return Err(invalid(format!("number of terms must be in 1..={MAX_TERMS}, got {terms}")));
        }
        if nodes < MIN_NODES {
            return Err(invalid(format!("need at least {MIN_NODES} nodes, got {nodes}")));
        }
        Ok(ExpansionOrder { terms, nodes })
    }
}

impl Default for ExpansionOrder {
    fn default() -> Self {
        ExpansionOrder { terms: 6, nodes: 24 }
    }
}

/// `S_kj = ∫_{−1}^{x_k} L_j(x) dx` for the Lagrange basis `L_j` of the nodes.
fn integration_matrix(x: &[f64], w: &[f64]) -> DMatrix<f64> {
    let m = x.len();
    let px: Vec<Vec<f64>> = x.iter().map(|&v| legendre_table(m, v)).collect();
    DMatrix::from_fn(m, m, |k, j| {
        let mut s = 0.5 * (x[k] + 1.0);
        for deg in 1..m {
            s += 0.5 * px[j][deg] * (px[k][deg + 1] - px[k][deg - 1]);
        }
        w[j] * s
    })
}

fn phase_diag(potential: &[f64], tau: f64) -> Vec<Complex64> {
    potential.iter().map(|&v| Complex64::from_polar(1.0, -tau * v)).collect()
}

fn scale_rows(d: &[Complex64], m: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| d[i] * m[(i, j)])
}

/// The terms `(−i)^n R_n(t)`, `n = 0, …, N−1`.
pub fn expansion_terms(
    delta: &DMatrix<f64>,
    potential: &[f64],
    nu: f64,
    t: f64,
    order: ExpansionOrder,
    time_cap: f64,
) -> Result<Vec<DMatrix<Complex64>>> {
    let n = delta.nrows();
    if !delta.is_square() || potential.len() != n {
        return Err(invalid("hopping matrix and potential have inconsistent sizes"));
    }
    let tau = t - nu;
    if !(tau.abs() <= time_cap) {
        return Err(invalid(format!("|t − ν| = {} exceeds the cap {time_cap}", tau.abs())));
    }
    let (x, w) = gauss_legendre(order.nodes);
    let s = integration_matrix(&x, &w);
    let half = 0.5 * tau;
    let taus: Vec<f64> = x.iter().map(|&xi| half * (xi + 1.0)).collect();
    let fwd: Vec<Vec<Complex64>> = taus.iter().map(|&u| phase_diag(potential, u)).collect();
    let back: Vec<Vec<Complex64>> = taus.iter().map(|&u| phase_diag(potential, -u)).collect();
    let delta_c = delta.map(|v| Complex64::new(v, 0.0));
    let end = phase_diag(potential, tau);

    let mut terms = vec![DMatrix::from_diagonal(&nalgebra::DVector::from_vec(end.clone()))];
    let mut current: Vec<DMatrix<Complex64>> =
        fwd.iter().map(|d| DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d.clone()))).collect();
    let mut sign = Complex64::new(1.0, 0.0);
    for _ in 1..order.terms {
        sign *= Complex64::new(0.0, -1.0);
        let g: Vec<DMatrix<Complex64>> =
            current.iter().zip(&back).map(|(r, b)| scale_rows(b, &(&delta_c * r))).collect();
        let mut next = Vec::with_capacity(order.nodes);
        for k in 0..order.nodes {
            let mut acc = DMatrix::<Complex64>::zeros(n, n);
            for (j, gj) in g.iter().enumerate() {
                acc += gj * Complex64::new(half * s[(k, j)], 0.0);
            }
            next.push(scale_rows(&fwd[k], &acc));
        }
        let mut total = DMatrix::<Complex64>::zeros(n, n);
        for (j, gj) in g.iter().enumerate() {
            total += gj * Complex64::new(half * w[j], 0.0);
        }
        terms.push(scale_rows(&end, &total) * sign);
        current = next;
    }
    Ok(terms)
}

/// `ψ_{ν,t,N}`, the sum of the first `N` terms of the expansion.
pub fn truncated_propagator(
    delta: &DMatrix<f64>,
    potential: &[f64],
    nu: f64,
    t: f64,
    order: ExpansionOrder,
) -> Result<DMatrix<Complex64>> {
    let terms = expansion_terms(delta, potential, nu, t, order, DEFAULT_TIME_CAP)?;
    let n = delta.nrows();
    Ok(terms.into_iter().fold(DMatrix::zeros(n, n), |acc, m| acc + m))
}

/// `e^{−iτ(Δ + diag(v))}` by diagonalization.
pub fn exact_propagator(delta: &DMatrix<f64>, potential: &[f64], tau: f64) -> Result<DMatrix<Complex64>> {
    let mut h = delta.clone();
    for (i, v) in potential.iter().enumerate() {
        h[(i, i)] += v;
    }
    Ok(propagator(&diagonalize(&h)?, tau))
}

/// Laplacian of an open chain of `n` sites, `2` on the diagonal and `−1`
/// between neighbours.
pub fn chain_laplacian(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            2.0
        } else if i.abs_diff(j) == 1 {
            -1.0
        } else {
            0.0
        }
    })
}

/// `(‖Δ‖·|τ|)^N / N!`.
pub fn remainder_bound(delta_norm: f64, tau: f64, terms: usize) -> f64 {
    let x = delta_norm * tau.abs();
    (1..=terms).fold(1.0, |acc, k| acc * x / k as f64)
}

/// Largest singular value.
pub fn op_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// `𝔼[e^{isV(0)}]`.
pub fn characteristic_function(distribution: Distribution, s: f64) -> Complex64 {
    let re = match distribution {
        Distribution::Uniform => {
            if s.abs() < 1e-8 {
                1.0 - s * s / 6.0
            } else {
                s.sin() / s
            }
        }
        Distribution::Rademacher => s.cos(),
        Distribution::Zero => 1.0,
    };
    Complex64::new(re, 0.0)
}

/// `𝔼[Π_j e^{±i𝔱_j λ V(x_j)}]` for pairwise distinct sites `x_j`; each
/// exponent is `(𝔱_j, sign_j)` with `𝔱_j > 0`.
pub fn phase_product_expectation(
    sites: &[usize],
    exponents: &[(f64, i8)],
    coupling: f64,
    distribution: Distribution,
) -> Result<Complex64> {
    if sites.len() != exponents.len() {
        return Err(invalid("one exponent per site is required"));
    }
    let mut sorted = sites.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        return Err(invalid("sites must be pairwise distinct"));
    }
    let mut out = Complex64::new(1.0, 0.0);
    for &(tt, sign) in exponents {
        if !(tt > 0.0) || !(sign == 1 || sign == -1) {
            return Err(invalid("exponents need 𝔱 > 0 and sign ±1"));
        }
        out *= characteristic_function(distribution, sign as f64 * tt * coupling);
    }
    Ok(out)
}
