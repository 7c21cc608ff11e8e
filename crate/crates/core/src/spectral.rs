//! Dense symmetric eigendecomposition and the matrix functions built from it.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dense;
use crate::error::{invalid, Error, Result};

/// Orthonormality tolerance on `ΦᵀΦ − I`.
pub const ORTHO_TOL: f64 = 1e-10;
/// Residual tolerance on `HΦ − ΦE`, relative to `max(1, ‖H‖_max)`.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Eigenpairs of a real symmetric matrix, energies ascending, eigenvectors
/// stored as the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// `‖ΦᵀΦ − I‖_max`.
    pub fn orthogonality_defect(&self) -> f64 {
        let g = dense::gemm(&self.vectors, true, &self.vectors, false);
        (g - DMatrix::identity(self.len(), self.len())).amax()
    }

    /// `‖HΦ − Φ·diag(E)‖_max`.
    pub fn residual(&self, h: &DMatrix<f64>) -> f64 {
        let mut r = dense::gemm(h, false, &self.vectors, false);
        for (j, e) in self.energies.iter().enumerate() {
            r.column_mut(j).axpy(-e, &self.vectors.column(j), 1.0);
        }
        r.amax()
    }

    /// Spectral width `E_max − E_min`.
    pub fn width(&self) -> f64 {
        match (self.energies.first(), self.energies.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// `Φ·diag(g(E))·Φᵀ`.
    pub fn apply_function(&self, g: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, e) in self.energies.iter().enumerate() {
            scaled.column_mut(j).scale_mut(g(*e));
        }
        dense::gemm(&scaled, false, &self.vectors, true)
    }
}

/// Diagonalizes a real symmetric matrix and checks the result against
/// [`ORTHO_TOL`] and [`RESIDUAL_TOL`].
pub fn diagonalize(h: &DMatrix<f64>) -> Result<EigenSystem> {
    if !h.is_square() {
        return Err(invalid("matrix is not square"));
    }
    if h.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    if (h - h.transpose()).amax() > 0.0 {
        return Err(invalid("matrix is not symmetric"));
    }
    let (energies, vectors) = dense::symmetric_eigen(h)?;
    let eig = EigenSystem { energies, vectors };
    let ortho = eig.orthogonality_defect();
    let res = eig.residual(h);
    let scale = h.amax().max(1.0);
    if !(ortho <= ORTHO_TOL && res <= RESIDUAL_TOL * scale) {
        return Err(Error::Numerical(format!(
            "eigensystem check failed: orthogonality {ortho:.3e}, residual {res:.3e}"
        )));
    }
    Ok(eig)
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("inverse temperature must be positive, got {beta}")))
    }
}

/// `F_α^β(κ) = e^{ακ}/(1 + e^{βκ})` for `0 ≤ α ≤ β`.
pub fn fermi_weight(kappa: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(0.0..=beta).contains(&alpha) {
        return Err(invalid(format!("alpha {alpha} outside [0, {beta}]")));
    }
    Ok(fermi_weight_unchecked(kappa, alpha, beta))
}

/// Both exponents are non-positive in either branch, so nothing overflows.
#[inline]
pub(crate) fn fermi_weight_unchecked(kappa: f64, alpha: f64, beta: f64) -> f64 {
    if kappa > 0.0 {
        ((alpha - beta) * kappa).exp() / (1.0 + (-beta * kappa).exp())
    } else {
        (alpha * kappa).exp() / (1.0 + (beta * kappa).exp())
    }
}

/// Occupation `1/(1 + e^{βE})`.
#[inline]
pub fn occupation(energy: f64, beta: f64) -> f64 {
    fermi_weight_unchecked(energy, 0.0, beta)
}

/// The Fermi symbol `(1 + e^{βH})^{-1}`.
pub fn fermi_symbol(eig: &EigenSystem, beta: f64) -> Result<DMatrix<f64>> {
    check_beta(beta)?;
    Ok(eig.apply_function(|e| occupation(e, beta)))
}

/// `e^{−itH}`.
pub fn propagator(eig: &EigenSystem, t: f64) -> DMatrix<Complex64> {
    let n = eig.len();
    let phi = eig.vectors.map(|v| Complex64::new(v, 0.0));
    let mut scaled = phi.clone();
    for (j, e) in eig.energies.iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -t * e);
        scaled.column_mut(j).iter_mut().for_each(|v| *v *= ph);
    }
    let mut out = DMatrix::zeros(n, n);
    out.gemm(Complex64::new(1.0, 0.0), &scaled, &phi.transpose(), Complex64::new(0.0, 0.0));
    out
}

/// `e^{−itH}` applied to a vector.
pub fn evolve_vector(eig: &EigenSystem, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
    let phi = &eig.vectors;
    let mut coeffs = DVector::<Complex64>::zeros(eig.len());
    for j in 0..eig.len() {
        let overlap: Complex64 = phi.column(j).iter().zip(v.iter()).map(|(a, b)| b * *a).sum();
        coeffs[j] = overlap * Complex64::from_polar(1.0, -t * eig.energies[j]);
    }
    let mut out = DVector::<Complex64>::zeros(v.len());
    for j in 0..eig.len() {
        for i in 0..v.len() {
            out[i] += coeffs[j] * phi[(i, j)];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_laplacian, Boundary, LatticeBox};
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn one_by_one() {
        let eig = diagonalize(&DMatrix::from_element(1, 1, 3.5)).unwrap();
        assert_eq!(eig.energies, vec![3.5]);
        assert!((eig.vectors[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_site_open_chain() {
        let h = build_laplacian(&LatticeBox::new(1, 1, Boundary::Open).unwrap());
        let eig = diagonalize(&h).unwrap();
        let s = 2f64.sqrt();
        for (e, x) in eig.energies.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((e - x).abs() < 1e-13);
        }
    }

    #[test]
    fn periodic_plane_waves() {
        let b = LatticeBox::new(1, 6, Boundary::Periodic).unwrap();
        let n = b.num_sites();
        let eig = diagonalize(&build_laplacian(&b)).unwrap();
        let mut exact: Vec<f64> = (0..n)
            .map(|k| 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        exact.sort_by(f64::total_cmp);
        for (e, x) in eig.energies.iter().zip(exact) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn reconstruction() {
        let h = random_symmetric(20, 3);
        let eig = diagonalize(&h).unwrap();
        assert!((eig.apply_function(|e| e) - &h).amax() < 1e-10);
        assert!(eig.energies.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rejects_asymmetric() {
        let mut h = random_symmetric(4, 1);
        h[(0, 1)] += 1e-3;
        assert!(diagonalize(&h).is_err());
    }

    #[test]
    fn weight_values() {
        assert_eq!(fermi_weight(0.0, 0.0, 3.0).unwrap(), 0.5);
        let tiny = fermi_weight(350.0, 0.0, 2.0).unwrap();
        assert!(tiny > 0.0 && tiny < 1e-300);
        assert!(fermi_weight(1.0, 2.0, 1.0).is_err());
        assert!(fermi_weight(1.0, -0.1, 1.0).is_err());
        // log-space reference at the overflow edge
        let (k, a, b): (f64, f64, f64) = (350.0, 0.5, 2.0);
        let log_ref = a * k - (b * k + (-b * k).exp().ln_1p());
        assert!((fermi_weight(k, a, b).unwrap().ln() - log_ref).abs() < 1e-12);
    }

    #[test]
    fn small_beta_symbol_is_half() {
        let b = LatticeBox::new(1, 4, Boundary::Open).unwrap();
        let eig = diagonalize(&build_laplacian(&b)).unwrap();
        let d = fermi_symbol(&eig, 1e-8).unwrap();
        let half = DMatrix::<f64>::identity(9, 9) * 0.5;
        assert!((d - half).amax() < 1e-7);
    }

    #[test]
    fn symbol_plus_reflection_is_identity() {
        let h = random_symmetric(12, 9);
        let eig = diagonalize(&h).unwrap();
        let m = eig.apply_function(|e| occupation(e, 2.3) + occupation(-e, 2.3));
        assert!((m - DMatrix::identity(12, 12)).amax() < 1e-10);
        let d = fermi_symbol(&eig, 2.3).unwrap();
        assert!(d.trace() > 0.0 && d.trace() < 12.0);
    }

    #[test]
    fn propagator_unitary_and_group_law() {
        let h = random_symmetric(10, 4);
        let eig = diagonalize(&h).unwrap();
        assert!((propagator(&eig, 0.0) - DMatrix::identity(10, 10)).camax() < 1e-13);
        let u = propagator(&eig, 0.73);
        let uu = &u * u.adjoint();
        assert!((uu - DMatrix::identity(10, 10)).camax() < 1e-10);
        let lhs = propagator(&eig, 0.4) * propagator(&eig, 1.1);
        assert!((lhs - propagator(&eig, 1.5)).camax() < 1e-9);
        let v = DVector::from_fn(10, |i, _| Complex64::new(i as f64, 1.0));
        assert!((evolve_vector(&eig, 0.73, &v) - &u * &v).camax() < 1e-12);
    }
}
