//! Boxes, site indexing, disorder sampling and the one-particle Hamiltonian
//! `Δ + λ·diag(ω)`.
//!
//! Sites of a box with half-side `l` are the points of `{-l, …, l}^d`,
//! numbered in row-major lexicographic order: the last coordinate varies
//! fastest.

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest number of sites a box may hold.
pub const MAX_SITES: usize = 5000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    #[default]
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(invalid(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// The box `{-l, …, l}^d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeBox {
    dim: usize,
    half_side: usize,
    boundary: Boundary,
}

impl LatticeBox {
    pub fn new(dim: usize, half_side: usize, boundary: Boundary) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        if half_side == 0 {
            return Err(invalid("half-side must be at least 1"));
        }
        let side = 2 * half_side + 1;
        let mut sites: usize = 1;
        for _ in 0..dim {
            sites = sites.saturating_mul(side);
        }
        if sites > MAX_SITES {
            return Err(Error::TooManySites { sites, cap: MAX_SITES });
        }
        Ok(LatticeBox { dim, half_side, boundary })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_side(&self) -> usize {
        self.half_side
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Number of sites per axis, `2l + 1`.
    pub fn side(&self) -> usize {
        2 * self.half_side + 1
    }

    pub fn num_sites(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Index of the site with the given coordinates, or `None` outside the box.
    pub fn index(&self, coords: &[i64]) -> Option<usize> {
        if coords.len() != self.dim {
            return None;
        }
        let l = self.half_side as i64;
        let mut idx = 0usize;
        for &c in coords {
            if c < -l || c > l {
                return None;
            }
            idx = idx * self.side() + (c + l) as usize;
        }
        Some(idx)
    }

    pub fn coords(&self, mut index: usize) -> Vec<i64> {
        let side = self.side();
        let mut out = vec![0i64; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (index % side) as i64 - self.half_side as i64;
            index /= side;
        }
        out
    }

    /// Coordinates reduced into the box: wrapped for periodic boxes, `None`
    /// when they fall outside an open box.
    pub fn resolve(&self, coords: &[i64]) -> Option<usize> {
        match self.boundary {
            Boundary::Open => self.index(coords),
            Boundary::Periodic => {
                let side = self.side() as i64;
                let l = self.half_side as i64;
                let wrapped: Vec<i64> =
                    coords.iter().map(|&c| (c + l).rem_euclid(side) - l).collect();
                self.index(&wrapped)
            }
        }
    }

    /// Site reached from `index` by `step` units along `axis` (0-based).
    pub fn shift(&self, index: usize, axis: usize, step: i64) -> Option<usize> {
        let mut c = self.coords(index);
        c[axis] += step;
        self.resolve(&c)
    }

    /// Gershgorin enclosure `[-λ, 4d + λ]` of the spectrum of `Δ + λ·diag(ω)`.
    pub fn gershgorin(&self, coupling: f64) -> (f64, f64) {
        let c = coupling.abs();
        (-c, 4.0 * self.dim as f64 + c)
    }
}

/// A summation box `Λ_l` sitting inside the computation box `Λ_L`.
///
/// With periodic boundaries the inner box defaults to the whole torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    outer: LatticeBox,
    inner_half_side: usize,
}

impl Region {
    pub fn full(outer: LatticeBox) -> Self {
        Region { outer, inner_half_side: outer.half_side }
    }

    /// Inner box of half-side `inner` inside `outer`. Open boxes need a
    /// margin of at least one site so that every bond `(x, x - e_k)` stays
    /// inside.
    pub fn new(outer: LatticeBox, inner: usize) -> Result<Self> {
        if inner == 0 {
            return Err(invalid("inner half-side must be at least 1"));
        }
        let ok = match outer.boundary {
            Boundary::Open => inner < outer.half_side,
            Boundary::Periodic => inner <= outer.half_side,
        };
        if !ok {
            return Err(invalid(format!(
                "inner half-side {inner} does not fit in a {:?} box of half-side {}",
                outer.boundary, outer.half_side
            )));
        }
        Ok(Region { outer, inner_half_side: inner })
    }

    /// Open computation box of half-side `inner + padding` around an inner box.
    pub fn padded(dim: usize, inner: usize, padding: usize) -> Result<Self> {
        if padding == 0 {
            return Err(invalid("padding must be at least 1"));
        }
        let outer = LatticeBox::new(dim, inner + padding, Boundary::Open)?;
        Region::new(outer, inner)
    }

    pub fn outer(&self) -> &LatticeBox {
        &self.outer
    }

    pub fn inner_half_side(&self) -> usize {
        self.inner_half_side
    }

    /// `|Λ_l|`.
    pub fn inner_volume(&self) -> usize {
        (2 * self.inner_half_side + 1).pow(self.outer.dim as u32)
    }

    /// Indices (in the computation box) of the inner sites, in row-major order.
    pub fn inner_sites(&self) -> Vec<usize> {
        let l = self.inner_half_side as i64;
        (0..self.outer.num_sites())
            .filter(|&i| self.outer.coords(i).iter().all(|c| c.abs() <= l))
            .collect()
    }

    /// Bonds `(x, x - e_k)` for every inner site `x`; `direction` is 1-based.
    pub fn bonds(&self, direction: usize) -> Result<Vec<(usize, usize)>> {
        let axis = axis_of(direction, self.outer.dim)?;
        self.inner_sites()
            .into_iter()
            .map(|x| {
                self.outer
                    .shift(x, axis, -1)
                    .map(|y| (x, y))
                    .ok_or_else(|| Error::OutsideBox(format!("{:?}", self.outer.coords(x))))
            })
            .collect()
    }
}

/// Padding `max(8, ⌈2·t_max⌉)` used for open boxes by default.
pub fn default_padding(t_max: f64) -> usize {
    8usize.max((2.0 * t_max).ceil() as usize)
}

pub(crate) fn axis_of(direction: usize, dim: usize) -> Result<usize> {
    if direction == 0 || direction > dim {
        return Err(invalid(format!("direction {direction} not in 1..={dim}")));
    }
    Ok(direction - 1)
}

/// The discrete Laplacian `[Δψ](x) = 2d·ψ(x) − Σ_{|z|=1} ψ(x+z)`.
pub fn build_laplacian(b: &LatticeBox) -> DMatrix<f64> {
    let n = b.num_sites();
    let mut m = DMatrix::zeros(n, n);
    for x in 0..n {
        m[(x, x)] += 2.0 * b.dim as f64;
        for axis in 0..b.dim {
            for step in [-1, 1] {
                if let Some(y) = b.shift(x, axis, step) {
                    m[(x, y)] -= 1.0;
                }
            }
        }
    }
    m
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    #[default]
    Uniform,
    Rademacher,
    Zero,
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Distribution::Uniform),
            "rademacher" => Ok(Distribution::Rademacher),
            "zero" => Ok(Distribution::Zero),
            other => Err(invalid(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Law of the on-site potential together with its coupling and master seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderSpec {
    pub distribution: Distribution,
    pub coupling: f64,
    pub master_seed: u64,
}

/// One draw of the potential, one value per site in index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    pub values: Vec<f64>,
    pub realization_index: u64,
    pub derived_seed: u64,
}

impl DisorderRealization {
    /// A hand-made potential, e.g. a constant shift.
    pub fn from_values(values: Vec<f64>) -> Self {
        DisorderRealization { values, realization_index: 0, derived_seed: 0 }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of realization `index` under `master_seed`.
pub fn realization_seed(master_seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master_seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

pub fn sample_disorder(spec: &DisorderSpec, b: &LatticeBox, index: u64) -> DisorderRealization {
    let seed = realization_seed(spec.master_seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..b.num_sites())
        .map(|_| match spec.distribution {
            Distribution::Uniform => rng.random_range(-1.0..=1.0),
            Distribution::Rademacher => {
                if rng.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            Distribution::Zero => 0.0,
        })
        .collect();
    DisorderRealization { values, realization_index: index, derived_seed: seed }
}

/// `Δ + λ·diag(ω)`.
pub fn assemble_hamiltonian(
    b: &LatticeBox,
    disorder: &DisorderRealization,
    coupling: f64,
) -> Result<DMatrix<f64>> {
    if disorder.values.len() != b.num_sites() {
        return Err(invalid(format!(
            "disorder has {} values for {} sites",
            disorder.values.len(),
            b.num_sites()
        )));
    }
    if !coupling.is_finite() {
        return Err(invalid("coupling must be finite"));
    }
    let mut h = build_laplacian(b);
    for (i, v) in disorder.values.iter().enumerate() {
        h[(i, i)] += coupling * v;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_roundtrip() {
        let b = LatticeBox::new(3, 2, Boundary::Open).unwrap();
        for i in 0..b.num_sites() {
            assert_eq!(b.index(&b.coords(i)), Some(i));
        }
        assert_eq!(b.coords(0), vec![-2, -2, -2]);
        assert_eq!(b.coords(1), vec![-2, -2, -1]);
    }

    #[test]
    fn three_site_chains() {
        let open = build_laplacian(&LatticeBox::new(1, 1, Boundary::Open).unwrap());
        let expected = DMatrix::from_row_slice(3, 3, &[2., -1., 0., -1., 2., -1., 0., -1., 2.]);
        assert_eq!(open, expected);
        let periodic = build_laplacian(&LatticeBox::new(1, 1, Boundary::Periodic).unwrap());
        assert_eq!(periodic[(0, 2)], -1.0);
        assert_eq!(periodic[(2, 0)], -1.0);
        for r in 0..3 {
            assert_eq!(periodic.row(r).sum(), 0.0);
        }
    }

    #[test]
    fn size_cap() {
        assert!(matches!(
            LatticeBox::new(2, 40, Boundary::Periodic),
            Err(Error::TooManySites { .. })
        ));
        assert!(LatticeBox::new(2, 34, Boundary::Periodic).is_ok());
    }

    #[test]
    fn region_margins() {
        let outer = LatticeBox::new(1, 4, Boundary::Open).unwrap();
        assert!(Region::new(outer, 4).is_err());
        let r = Region::new(outer, 3).unwrap();
        assert_eq!(r.inner_volume(), 7);
        assert_eq!(r.bonds(1).unwrap().len(), 7);
        assert!(r.bonds(2).is_err());
        let torus = LatticeBox::new(1, 4, Boundary::Periodic).unwrap();
        let bonds = Region::full(torus).bonds(1).unwrap();
        assert_eq!(bonds[0], (0, 8));
    }

    #[test]
    fn zero_distribution_is_zero() {
        let b = LatticeBox::new(2, 3, Boundary::Periodic).unwrap();
        let spec = DisorderSpec { distribution: Distribution::Zero, coupling: 1.0, master_seed: 7 };
        assert!(sample_disorder(&spec, &b, 3).values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn uniform_statistics() {
        let b = LatticeBox::new(1, 2000, Boundary::Periodic).unwrap();
        let spec =
            DisorderSpec { distribution: Distribution::Uniform, coupling: 1.0, master_seed: 11 };
        let mut all = Vec::new();
        for idx in 0..25 {
            all.extend(sample_disorder(&spec, &b, idx).values);
        }
        assert!(all.len() >= 100_000);
        let mean = all.iter().sum::<f64>() / all.len() as f64;
        assert!(mean.abs() <= 0.01, "mean {mean}");
        assert!(all.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn sampling_is_reproducible() {
        let b = LatticeBox::new(1, 10, Boundary::Open).unwrap();
        let spec =
            DisorderSpec { distribution: Distribution::Rademacher, coupling: 1.0, master_seed: 5 };
        let a = sample_disorder(&spec, &b, 9);
        assert_eq!(a, sample_disorder(&spec, &b, 9));
        assert_ne!(a.values, sample_disorder(&spec, &b, 10).values);
        assert!(a.values.iter().all(|v| v.abs() == 1.0));
    }

    #[test]
    fn hamiltonian_is_bitwise_symmetric() {
        let b = LatticeBox::new(2, 3, Boundary::Periodic).unwrap();
        let spec =
            DisorderSpec { distribution: Distribution::Uniform, coupling: 2.0, master_seed: 1 };
        let h = assemble_hamiltonian(&b, &sample_disorder(&spec, &b, 0), 2.0).unwrap();
        assert_eq!(h, h.transpose());
        assert!(assemble_hamiltonian(&b, &DisorderRealization::from_values(vec![0.0; 3]), 1.0)
            .is_err());
    }

    #[test]
    fn periodic_laplacian_commutes_with_shift() {
        let b = LatticeBox::new(2, 3, Boundary::Periodic).unwrap();
        let h = build_laplacian(&b);
        let n = b.num_sites();
        let mut s = DMatrix::zeros(n, n);
        for x in 0..n {
            s[(b.shift(x, 0, 1).unwrap(), x)] = 1.0;
        }
        let c = &h * &s - &s * &h;
        assert!(c.amax() <= 1e-14);
    }
}
