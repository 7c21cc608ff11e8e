//! Complex-time two-point functions, the four-point kernel `𝔠`, and the
//! Duhamel and state inner products of current observables, all reduced to
//! one-particle spectral data through Wick's rule for the quasi-free
//! thermal state with symbol `d = (1 + e^{βH})^{-1}`.
//!
//! A current is a real combination of `Im(a*(ψ1) a(ψ2))`. It is the second
//! quantization `Σ M_ab a*_a a_b` of the Hermitian one-particle kernel
//! `M = Σ c·(ψ1ψ2^† − ψ2ψ1^†)/(2i)`, and all correlators below are traces
//! of such kernels against functions of `H`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dense;
use crate::error::{invalid, Error, Result};
use crate::lattice::{LatticeBox, Region};
use crate::spectral::{check_beta, evolve_vector, fermi_weight_unchecked, occupation, EigenSystem};

/// Below this value of `|β·ΔE|` the α-weight switches to its Taylor series.
pub const SERIES_THRESHOLD: f64 = 1e-6;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Sparse complex amplitudes indexed by site.
pub type SiteVector = Vec<(usize, Complex64)>;

/// `coeff · Im(a*(ψ1) a(ψ2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentTerm {
    pub coeff: f64,
    pub psi1: SiteVector,
    pub psi2: SiteVector,
}

/// A finite real combination of elementary currents.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Current {
    pub terms: Vec<CurrentTerm>,
}

fn delta(x: usize) -> SiteVector {
    vec![(x, Complex64::new(1.0, 0.0))]
}

fn l1(v: &SiteVector) -> f64 {
    v.iter().map(|(_, a)| a.norm()).sum()
}

impl Current {
    /// `Im(a*(ψ1) a(ψ2))`.
    pub fn im_pair(psi1: SiteVector, psi2: SiteVector) -> Self {
        Current { terms: vec![CurrentTerm { coeff: 1.0, psi1, psi2 }] }
    }

    /// The bond current `I_(x1,x2) = −2·Im(a*_{x2} a_{x1})`.
    pub fn bond(x1: usize, x2: usize) -> Self {
        Current { terms: vec![CurrentTerm { coeff: -2.0, psi1: delta(x2), psi2: delta(x1) }] }
    }

    pub fn scaled(&self, c: f64) -> Self {
        let terms =
            self.terms.iter().map(|t| CurrentTerm { coeff: c * t.coeff, ..t.clone() }).collect();
        Current { terms }
    }

    pub fn plus(&self, other: &Current) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Current { terms }
    }

    /// `Σ |c|·‖ψ1‖₁·‖ψ2‖₁` over the terms.
    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.abs() * l1(&t.psi1) * l1(&t.psi2)).sum()
    }

    fn max_site(&self) -> Option<usize> {
        self.terms.iter().flat_map(|t| t.psi1.iter().chain(&t.psi2)).map(|(x, _)| *x).max()
    }

    /// Hermitian kernel `M` with `I = Σ M_ab a*_a a_b`.
    pub fn kernel(&self, n: usize) -> Result<DMatrix<Complex64>> {
        if let Some(x) = self.max_site() {
            if x >= n {
                return Err(Error::OutsideBox(format!("site index {x} with {n} sites")));
            }
        }
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for t in &self.terms {
            let c = Complex64::new(t.coeff, 0.0) / (2.0 * I);
            for &(a, u) in &t.psi1 {
                for &(b, v) in &t.psi2 {
                    let z = c * u * v.conj();
                    m[(a, b)] += z;
                    m[(b, a)] += z.conj();
                }
            }
        }
        Ok(m)
    }

    /// The space translate `χ_x(I)`: every site moved by `offset`.
    pub fn translate(&self, b: &LatticeBox, offset: &[i64]) -> Result<Self> {
        let move_vec = |v: &SiteVector| -> Result<SiteVector> {
            v.iter()
                .map(|&(x, a)| {
                    let mut c = b.coords(x);
                    for (ci, o) in c.iter_mut().zip(offset) {
                        *ci += o;
                    }
                    b.resolve(&c)
                        .map(|y| (y, a))
                        .ok_or_else(|| Error::OutsideBox(format!("{c:?}")))
                })
                .collect()
        };
        let terms = self
            .terms
            .iter()
            .map(|t| {
                Ok(CurrentTerm { coeff: t.coeff, psi1: move_vec(&t.psi1)?, psi2: move_vec(&t.psi2)? })
            })
            .collect::<Result<_>>()?;
        Ok(Current { terms })
    }

    /// The time translate `τ_s(I)`, obtained by `ψ ↦ e^{isH}ψ`.
    pub fn evolve(&self, eig: &EigenSystem, s: f64) -> Self {
        let n = eig.len();
        let move_vec = |v: &SiteVector| -> SiteVector {
            let mut dense = DVector::<Complex64>::zeros(n);
            for &(x, a) in v {
                dense[x] += a;
            }
            let out = evolve_vector(eig, -s, &dense);
            out.iter().enumerate().map(|(x, a)| (x, *a)).collect()
        };
        let terms = self
            .terms
            .iter()
            .map(|t| CurrentTerm { coeff: t.coeff, psi1: move_vec(&t.psi1), psi2: move_vec(&t.psi2) })
            .collect();
        Current { terms }
    }

    /// `Σ_{x∈Λ_l} χ_x(I)`.
    pub fn box_sum(&self, region: &Region) -> Result<Self> {
        let outer = region.outer();
        let mut total = Current::default();
        for x in region.inner_sites() {
            total = total.plus(&self.translate(outer, &outer.coords(x))?);
        }
        Ok(total)
    }
}

/// Kernel of a current expressed in the eigenbasis, `ΦᵀMΦ`.
fn eigen_kernel(eig: &EigenSystem, current: &Current) -> Result<DMatrix<Complex64>> {
    let m = current.kernel(eig.len())?;
    let re = m.map(|z| z.re);
    let im = m.map(|z| z.im);
    let phi = &eig.vectors;
    let a_re = dense::gemm(&dense::gemm(phi, true, &re, false), false, phi, false);
    let a_im = dense::gemm(&dense::gemm(phi, true, &im, false), false, phi, false);
    Ok(a_re.zip_map(&a_im, Complex64::new))
}

fn check_alpha(alpha: f64, beta: f64) -> Result<()> {
    if (0.0..=beta).contains(&alpha) {
        Ok(())
    } else {
        Err(invalid(format!("alpha {alpha} outside [0, {beta}]")))
    }
}

/// `C_{t+iα}(x1, x2) = ⟨e_{x2}, e^{−itH} F_α^β(H) e_{x1}⟩`.
pub fn complex_time_correlator(
    eig: &EigenSystem,
    beta: f64,
    t: f64,
    alpha: f64,
    x1: usize,
    x2: usize,
) -> Result<Complex64> {
    check_beta(beta)?;
    check_alpha(alpha, beta)?;
    let n = eig.len();
    if x1 >= n || x2 >= n {
        return Err(Error::OutsideBox(format!("({x1}, {x2}) with {n} sites")));
    }
    let phi = &eig.vectors;
    Ok(eig
        .energies
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            Complex64::from_polar(phi[(x2, i)] * phi[(x1, i)] * fermi_weight_unchecked(e, alpha, beta), -t * e)
        })
        .sum())
}

/// The kernel `𝔠_{t+iα}(x, y)` for site pairs `x = (x¹, x²)`, `y = (y¹, y²)`:
/// the signed sum over `π, π′ ∈ S₂` of
/// `C_{t+iα}(y^{π′(1)}, x^{π(1)}) · C_{−t+i(β−α)}(x^{π(2)}, y^{π′(2)})`.
pub fn c_kernel(
    eig: &EigenSystem,
    beta: f64,
    t: f64,
    alpha: f64,
    x: (usize, usize),
    y: (usize, usize),
) -> Result<Complex64> {
    let perms = [((x.0, x.1), 1.0), ((x.1, x.0), -1.0)];
    let perms_y = [((y.0, y.1), 1.0), ((y.1, y.0), -1.0)];
    let mut total = Complex64::new(0.0, 0.0);
    for &((xa, xb), sx) in &perms {
        for &((ya, yb), sy) in &perms_y {
            let first = complex_time_correlator(eig, beta, t, alpha, ya, xa)?;
            let second = complex_time_correlator(eig, beta, -t, beta - alpha, xb, yb)?;
            total += sx * sy * first * second;
        }
    }
    Ok(total)
}

/// `W(ΔE) = ∫₀^β e^{αΔE} dα = (e^{βΔE} − 1)/ΔE`.
pub fn duhamel_alpha_weight(de: f64, beta: f64) -> f64 {
    let x = beta * de;
    if x.abs() < SERIES_THRESHOLD {
        beta * (1.0 + x / 2.0 + x * x / 6.0)
    } else {
        x.exp_m1() / de
    }
}

/// `∫₀^β F_α^β(E₁) F_{β−α}^β(E₂) dα`, symmetric in `(E₁, E₂)` and equal to
/// `(f(E₂) − f(E₁))/(E₁ − E₂)` with `f` the occupation. It is evaluated with
/// the lower energy first so that the α-weight never overflows.
pub fn duhamel_pair_weight(e1: f64, e2: f64, beta: f64) -> f64 {
    let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
    occupation(lo, beta) * fermi_weight_unchecked(hi, beta, beta) * duhamel_alpha_weight(lo - hi, beta)
}

/// Matrix of [`duhamel_pair_weight`] over all eigenvalue pairs.
pub fn duhamel_weights(eig: &EigenSystem, beta: f64) -> DMatrix<f64> {
    let e = &eig.energies;
    let n = e.len();
    let occ: Vec<f64> = e.iter().map(|&x| occupation(x, beta)).collect();
    let hole: Vec<f64> = e.iter().map(|&x| fermi_weight_unchecked(x, beta, beta)).collect();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let (lo, hi) = if e[i] <= e[j] { (i, j) } else { (j, i) };
            let w = occ[lo] * hole[hi] * duhamel_alpha_weight(e[lo] - e[hi], beta);
            k[(i, j)] = w;
            k[(j, i)] = w;
        }
    }
    k
}

fn expectation(a: &DMatrix<Complex64>, occ: &[f64]) -> f64 {
    occ.iter().enumerate().map(|(i, f)| a[(i, i)].re * f).sum()
}

fn connected_duhamel(
    eig: &EigenSystem,
    beta: f64,
    a: &DMatrix<Complex64>,
    b: &DMatrix<Complex64>,
    t: f64,
) -> f64 {
    let e = &eig.energies;
    let n = e.len();
    let k = duhamel_weights(eig, beta);
    let mut total = 0.0;
    for j in 0..n {
        let mut col = 0.0;
        for i in 0..n {
            let z = a[(i, j)].conj() * b[(i, j)] * Complex64::from_polar(1.0, t * (e[i] - e[j]));
            col += z.re * k[(i, j)];
        }
        total += col;
    }
    total
}

/// The Duhamel product `(I, τ_t(I′))_~ = ∫₀^β ω(I* τ_{t+iα}(I′)) dα`.
pub fn duhamel_current_inner(
    eig: &EigenSystem,
    beta: f64,
    current: &Current,
    other: &Current,
    t: f64,
) -> Result<f64> {
    check_beta(beta)?;
    let a = eigen_kernel(eig, current)?;
    let b = eigen_kernel(eig, other)?;
    let occ: Vec<f64> = eig.energies.iter().map(|&x| occupation(x, beta)).collect();
    let disconnected = beta * expectation(&a, &occ) * expectation(&b, &occ);
    Ok(connected_duhamel(eig, beta, &a, &b, t) + disconnected)
}

/// The fluctuation form `(I, τ_t I′)_{𝓘,l}`: the centered Duhamel product of
/// the box sums of translates, divided by `|Λ_l|`.
pub fn fluctuation_inner(
    eig: &EigenSystem,
    beta: f64,
    current: &Current,
    other: &Current,
    region: &Region,
    t: f64,
) -> Result<f64> {
    check_beta(beta)?;
    let a = eigen_kernel(eig, &current.box_sum(region)?)?;
    let b = eigen_kernel(eig, &other.box_sum(region)?)?;
    Ok(connected_duhamel(eig, beta, &a, &b, t) / region.inner_volume() as f64)
}

fn connected_state(eig: &EigenSystem, beta: f64, a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, t: f64) -> Complex64 {
    let e = &eig.energies;
    let occ: Vec<f64> = e.iter().map(|&x| occupation(x, beta)).collect();
    let hole: Vec<f64> = e.iter().map(|&x| fermi_weight_unchecked(x, beta, beta)).collect();
    let mut total = Complex64::new(0.0, 0.0);
    for j in 0..e.len() {
        for i in 0..e.len() {
            total += a[(i, j)].conj()
                * b[(i, j)]
                * (hole[i] * occ[j])
                * Complex64::from_polar(1.0, t * (e[i] - e[j]));
        }
    }
    total
}

/// The centered state product `ω((I − ω(I))* τ_t(I′ − ω(I′)))` of two currents.
pub fn state_inner(
    eig: &EigenSystem,
    beta: f64,
    current: &Current,
    other: &Current,
    t: f64,
) -> Result<Complex64> {
    check_beta(beta)?;
    let a = eigen_kernel(eig, current)?;
    let b = eigen_kernel(eig, other)?;
    Ok(connected_state(eig, beta, &a, &b, t))
}

/// `⟨I, τ_t I′⟩_{𝓘,l} = ω(F^{(l)}(I)* τ_t F^{(l)}(I′))`.
pub fn fluctuation_state_inner(
    eig: &EigenSystem,
    beta: f64,
    current: &Current,
    other: &Current,
    region: &Region,
    t: f64,
) -> Result<Complex64> {
    check_beta(beta)?;
    let a = eigen_kernel(eig, &current.box_sum(region)?)?;
    let b = eigen_kernel(eig, &other.box_sum(region)?)?;
    Ok(connected_state(eig, beta, &a, &b, t) / region.inner_volume() as f64)
}

/// Both sides of the auto-correlation comparison between the Duhamel and
/// state fluctuation forms of one current.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AutoCorrelation {
    pub duhamel: f64,
    pub state: f64,
    /// `duhamel / state`, and `duhamel / (β·state)`.
    pub ratio: f64,
    pub ratio_per_beta: f64,
}

pub fn auto_correlation(
    eig: &EigenSystem,
    beta: f64,
    current: &Current,
    region: &Region,
) -> Result<AutoCorrelation> {
    let duhamel = fluctuation_inner(eig, beta, current, current, region, 0.0)?;
    let state = fluctuation_state_inner(eig, beta, current, current, region, 0.0)?.re;
    Ok(AutoCorrelation {
        duhamel,
        state,
        ratio: duhamel / state,
        ratio_per_beta: duhamel / (beta * state),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_laplacian, Boundary};
    use crate::spectral::{diagonalize, fermi_symbol};

    fn chain(l: usize, bc: Boundary) -> (LatticeBox, EigenSystem) {
        let b = LatticeBox::new(1, l, bc).unwrap();
        let mut h = build_laplacian(&b);
        for i in 0..b.num_sites() {
            h[(i, i)] += ((i * 7 % 5) as f64 - 2.0) * 0.4;
        }
        (b, diagonalize(&h).unwrap())
    }

    #[test]
    fn alpha_weight_values() {
        assert_eq!(duhamel_alpha_weight(0.0, 2.5), 2.5);
        assert!((duhamel_alpha_weight(1.0, 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        let de: f64 = 1e-8;
        let direct = de.exp_m1() / de;
        assert!((duhamel_alpha_weight(de, 1.0) - direct).abs() / direct < 1e-12);
        let x = SERIES_THRESHOLD * 0.999;
        let direct = x.exp_m1() / x;
        assert!((duhamel_alpha_weight(x, 1.0) - direct).abs() / direct < 1e-13);
    }

    #[test]
    fn pair_weight_matches_difference_quotient() {
        for &(a, b, beta) in &[(0.3, 1.7, 1.0), (-2.0, 5.0, 3.0), (4.0, -1.0, 0.2), (1.0, 1.0, 2.0)] {
            let w = duhamel_pair_weight(a, b, beta);
            let reference = if a == b {
                beta * occupation(a, beta) * (1.0 - occupation(a, beta))
            } else {
                (occupation(b, beta) - occupation(a, beta)) / (a - b)
            };
            assert!((w - reference).abs() < 1e-13 * reference.abs().max(1e-3));
        }
        assert!(duhamel_pair_weight(-300.0, 300.0, 50.0).is_finite());
    }

    #[test]
    fn correlator_collapses_to_symbol() {
        let (_, eig) = chain(4, Boundary::Open);
        let d = fermi_symbol(&eig, 1.3).unwrap();
        for (x1, x2) in [(0, 0), (2, 3), (8, 1)] {
            let c = complex_time_correlator(&eig, 1.3, 0.0, 0.0, x1, x2).unwrap();
            assert!((c.re - d[(x2, x1)]).abs() < 1e-14 && c.im.abs() < 1e-15);
        }
        assert!(complex_time_correlator(&eig, 1.0, 0.0, 1.5, 0, 0).is_err());
    }

    #[test]
    fn degenerate_pair_kernel_vanishes() {
        let (_, eig) = chain(3, Boundary::Periodic);
        let z = c_kernel(&eig, 1.0, 0.7, 0.3, (2, 2), (2, 2)).unwrap();
        assert!(z.norm() < 1e-15);
    }

    #[test]
    fn centering_vanishes_for_bonds() {
        let (_, eig) = chain(4, Boundary::Open);
        let a = eigen_kernel(&eig, &Current::bond(3, 2)).unwrap();
        let occ: Vec<f64> = eig.energies.iter().map(|&x| occupation(x, 1.0)).collect();
        assert!(expectation(&a, &occ).abs() < 1e-16);
    }

    #[test]
    fn orientation_flip() {
        let (b, eig) = chain(6, Boundary::Periodic);
        let r = Region::full(b);
        let fwd = fluctuation_inner(&eig, 1.0, &Current::bond(6, 5), &Current::bond(6, 5), &r, 1.3).unwrap();
        let rev = fluctuation_inner(&eig, 1.0, &Current::bond(5, 6), &Current::bond(5, 6), &r, 1.3).unwrap();
        assert!((fwd - rev).abs() < 1e-12);
    }
}
