//! Correlators of the one-particle reduction against brute-force traces in
//! the many-body Fock space.

mod common;

use common::{chain, Fock};
use lattice_kubo::correlators::{c_kernel, duhamel_current_inner, state_inner, Current, SiteVector};
use lattice_kubo::lattice::{Boundary, LatticeBox};
use lattice_kubo::lattice::build_laplacian;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> SiteVector {
    (0..n).map(|x| (x, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))).collect()
}

fn random_current(rng: &mut ChaCha8Rng, n: usize) -> Current {
    let a = Current::im_pair(random_vector(rng, n), random_vector(rng, n));
    let b = Current::im_pair(random_vector(rng, n), random_vector(rng, n));
    a.plus(&b.scaled(rng.random_range(-2.0..2.0)))
}

fn hamiltonian(eig: &lattice_kubo::spectral::EigenSystem) -> nalgebra::DMatrix<f64> {
    eig.apply_function(|e| e)
}

#[test]
fn state_product_matches_fock_trace() {
    let (_, eig) = chain(2, Boundary::Open, 1.0, 11);
    let fock = Fock::new(&hamiltonian(&eig));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..4 {
        let (i1, i2) = (random_current(&mut rng, 5), random_current(&mut rng, 5));
        let (q1, q2) = (fock.quantize(&i1.kernel(5).unwrap()), fock.quantize(&i2.kernel(5).unwrap()));
        for (beta, t) in [(0.7, 0.0), (1.3, 0.9), (2.0, -2.4)] {
            let ours = state_inner(&eig, beta, &i1, &i2, t).unwrap();
            let oracle = fock.complex_time(beta, &q1, &q2, t, 0.0, true);
            assert!((ours - oracle).norm() < 1e-10, "{ours} vs {oracle}");
        }
    }
}

#[test]
fn duhamel_product_matches_fock_trace() {
    let (_, eig) = chain(2, Boundary::Periodic, 0.8, 5);
    let fock = Fock::new(&hamiltonian(&eig));
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..4 {
        let (i1, i2) = (random_current(&mut rng, 5), random_current(&mut rng, 5));
        let (q1, q2) = (fock.quantize(&i1.kernel(5).unwrap()), fock.quantize(&i2.kernel(5).unwrap()));
        for (beta, t) in [(0.5, 0.0), (1.0, 1.7), (3.0, -0.6)] {
            let ours = duhamel_current_inner(&eig, beta, &i1, &i2, t).unwrap();
            let oracle = fock.duhamel(beta, &q1, &q2, t);
            assert!((ours - oracle.re).abs() < 1e-10 * (1.0 + oracle.norm()), "{ours} vs {oracle}");
            assert!(oracle.im.abs() < 1e-10);
        }
    }
}

#[test]
fn four_point_kernel_is_connected_bond_correlation() {
    let (_, eig) = chain(2, Boundary::Open, 1.0, 3);
    let fock = Fock::new(&hamiltonian(&eig));
    let beta = 1.2;
    let bonds = [(1usize, 0usize), (3, 2), (2, 1), (4, 3)];
    for &x in &bonds {
        for &y in &bonds {
            let qx = fock.quantize(&Current::bond(x.0, x.1).kernel(5).unwrap());
            let qy = fock.quantize(&Current::bond(y.0, y.1).kernel(5).unwrap());
            for (t, alpha) in [(0.0, 0.0), (0.8, 0.3), (-1.5, 1.1)] {
                let ours = c_kernel(&eig, beta, t, alpha, x, y).unwrap();
                let oracle = fock.connected_product(beta, &qx, &qy, t, alpha);
                assert!((ours - oracle).norm() < 1e-10, "{x:?} {y:?} t={t}: {ours} vs {oracle}");
            }
        }
    }
}

#[test]
fn four_point_kernel_reflection() {
    let (_, eig) = chain(3, Boundary::Open, 1.0, 8);
    let beta = 1.0;
    let (x, y) = ((2, 1), (5, 4));
    let mut conj_gap: f64 = 0.0;
    for (t, alpha) in [(0.4, 0.2), (1.3, 0.7), (-0.9, 0.05)] {
        let a = c_kernel(&eig, beta, t, alpha, x, y).unwrap();
        let swapped = c_kernel(&eig, beta, -t, beta - alpha, y, x).unwrap();
        assert!((a - swapped).norm() < 1e-12);
        let mirrored = c_kernel(&eig, beta, -t, alpha, x, y).unwrap();
        assert!((a.conj() - mirrored).norm() < 1e-12);
        conj_gap = conj_gap.max((a - swapped.conj()).norm());
    }
    // the conjugated form of the reflection fails as soon as 𝔠 is not real
    assert!(conj_gap > 1e-3, "gap {conj_gap}");
}

#[test]
fn free_chain_laplacian_fock_sanity() {
    let b = LatticeBox::new(1, 1, Boundary::Open).unwrap();
    let fock = Fock::new(&build_laplacian(&b));
    // ground state fills the negative one-particle levels, none here
    let min = fock.levels.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(min.abs() < 1e-12);
    assert_eq!(fock.levels.len(), 8);
}
