#![allow(dead_code)]

use lattice_kubo::lattice::{
    assemble_hamiltonian, sample_disorder, Boundary, DisorderSpec, Distribution, LatticeBox, Region,
};
use lattice_kubo::quad::gauss_legendre;
use lattice_kubo::spectral::{diagonalize, EigenSystem};
use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub fn disordered(region: &Region, lambda: f64, seed: u64, index: u64) -> EigenSystem {
    let spec = DisorderSpec { distribution: Distribution::Uniform, coupling: lambda, master_seed: seed };
    let outer = region.outer();
    let h = assemble_hamiltonian(outer, &sample_disorder(&spec, outer, index), lambda).unwrap();
    diagonalize(&h).unwrap()
}

pub fn chain(l: usize, bc: Boundary, lambda: f64, seed: u64) -> (Region, EigenSystem) {
    let region = Region::full(LatticeBox::new(1, l, bc).unwrap());
    let eig = disordered(&region, lambda, seed, 0);
    (region, eig)
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gl(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(x, w)| (0.5 * (b - a) * (x + 1.0) + a, 0.5 * (b - a) * w)).collect()
}

/// Many-body Fock space of `n` fermionic modes in the Jordan–Wigner
/// representation, diagonalized for a one-particle Hamiltonian `h`.
pub struct Fock {
    pub modes: usize,
    pub annihilators: Vec<CMat>,
    /// Eigenvalues of the second-quantized Hamiltonian and its eigenvectors.
    pub levels: Vec<f64>,
    pub basis: CMat,
}

impl Fock {
    pub fn new(h: &DMatrix<f64>) -> Fock {
        let n = h.nrows();
        let dim = 1usize << n;
        let mut annihilators = Vec::new();
        for j in 0..n {
            let mut a = CMat::zeros(dim, dim);
            for state in 0..dim {
                if state & (1 << j) != 0 {
                    let parity = (state & ((1 << j) - 1)).count_ones();
                    let sign = if parity % 2 == 0 { 1.0 } else { -1.0 };
                    a[(state ^ (1 << j), state)] = Complex64::new(sign, 0.0);
                }
            }
            annihilators.push(a);
        }
        let mut k = CMat::zeros(dim, dim);
        for a in 0..n {
            for b in 0..n {
                if h[(a, b)] != 0.0 {
                    k += annihilators[a].adjoint() * &annihilators[b] * Complex64::new(h[(a, b)], 0.0);
                }
            }
        }
        let real = k.map(|z| z.re);
        let eig = real.symmetric_eigen();
        Fock {
            modes: n,
            annihilators,
            levels: eig.eigenvalues.iter().copied().collect(),
            basis: eig.eigenvectors.map(|v| Complex64::new(v, 0.0)),
        }
    }

    /// `Σ M_ab a*_a a_b` in the energy basis.
    pub fn quantize(&self, m: &CMat) -> CMat {
        let dim = 1usize << self.modes;
        let mut q = CMat::zeros(dim, dim);
        for a in 0..self.modes {
            for b in 0..self.modes {
                if m[(a, b)] != Complex64::new(0.0, 0.0) {
                    q += self.annihilators[a].adjoint() * &self.annihilators[b] * m[(a, b)];
                }
            }
        }
        self.basis.adjoint() * q * &self.basis
    }

    pub fn gibbs(&self, beta: f64) -> Vec<f64> {
        let lo = self.levels.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = self.levels.iter().map(|k| (-beta * (k - lo)).exp()).collect();
        let z: f64 = w.iter().sum();
        w.iter().map(|v| v / z).collect()
    }

    pub fn expect(&self, beta: f64, q: &CMat) -> Complex64 {
        self.gibbs(beta).iter().enumerate().map(|(m, p)| q[(m, m)] * *p).sum()
    }

    fn centered(&self, beta: f64, q: &CMat) -> CMat {
        let mean = self.expect(beta, q);
        q - CMat::identity(q.nrows(), q.ncols()) * mean
    }

    /// `ω(A* τ_{t+iα}(B))` with `A`, `B` centered when `center` is set.
    pub fn complex_time(&self, beta: f64, a: &CMat, b: &CMat, t: f64, alpha: f64, center: bool) -> Complex64 {
        let (a, b) = if center { (self.centered(beta, a), self.centered(beta, b)) } else { (a.clone(), b.clone()) };
        let p = self.gibbs(beta);
        let k = &self.levels;
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..k.len() {
            for n in 0..k.len() {
                let d = k[n] - k[m];
                total += a[(n, m)].conj() * b[(n, m)] * p[m] * Complex64::from_polar((-alpha * d).exp(), t * d);
            }
        }
        total
    }

    /// `ω(A τ_{t+iα}(B))` with both operators centered.
    pub fn connected_product(&self, beta: f64, a: &CMat, b: &CMat, t: f64, alpha: f64) -> Complex64 {
        self.complex_time(beta, &a.adjoint(), b, t, alpha, true)
    }

    /// `∫₀^β ω(A* τ_{t+iα}(B)) dα`, integrated in closed form level by level.
    pub fn duhamel(&self, beta: f64, a: &CMat, b: &CMat, t: f64) -> Complex64 {
        let p = self.gibbs(beta);
        let k = &self.levels;
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..k.len() {
            for n in 0..k.len() {
                let d = k[n] - k[m];
                let w = if (beta * d).abs() < 1e-12 { beta } else { -(-beta * d).exp_m1() / d };
                total += a[(n, m)].conj() * b[(n, m)] * p[m] * w * Complex64::from_polar(1.0, t * d);
            }
        }
        total
    }
}
