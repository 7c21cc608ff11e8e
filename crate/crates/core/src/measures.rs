//! Finite measures on the frequency axis: atomic measures (Bohr-frequency
//! spectra), densities on uniform grids, their transforms and moments, and
//! the Drude reference family.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Weights in `[-NEGATIVE_TOL, 0)` are clamped to zero; anything below is an error.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// Common interface of atomic and density measures.
pub trait FiniteMeasure {
    /// `∫ f dμ`.
    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64;

    fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `∫ ν^k dμ`.
    fn moment(&self, k: u32) -> f64 {
        self.integrate(|nu| nu.powi(k as i32))
    }

    /// `∫ (1 + |ν|) dμ`.
    fn abs_first_moment(&self) -> f64 {
        self.integrate(|nu| 1.0 + nu.abs())
    }

    /// `∫ cos(tν) dμ`.
    fn cos_transform(&self, t: f64) -> f64 {
        self.integrate(|nu| (t * nu).cos())
    }

    /// Pairing with a test function.
    fn weak_star_pair(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.integrate(f)
    }
}

/// Point masses `(ν, w)` sorted by frequency.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
    /// Number of slightly negative weights that were clamped to zero.
    clamped: usize,
}

impl AtomicMeasure {
    /// Builds a non-negative measure, clamping weights in `[-1e-12, 0)`.
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        let mut clamped = 0;
        for (nu, w) in atoms.iter_mut() {
            if !nu.is_finite() || !w.is_finite() {
                return Err(invalid("non-finite atom"));
            }
            if *w < -NEGATIVE_TOL {
                return Err(Error::Numerical(format!("negative weight {w:e} at frequency {nu}")));
            }
            if *w < 0.0 {
                *w = 0.0;
                clamped += 1;
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(AtomicMeasure { atoms, clamped })
    }

    /// Builds a signed measure without any sign check.
    pub fn signed(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        AtomicMeasure { atoms, clamped: 0 }
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn clamped(&self) -> usize {
        self.clamped
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Merges atoms whose frequencies lie within `width` of the first atom
    /// of their bin; the merged frequency is the mass-weighted mean.
    pub fn binned(&self, width: f64) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut i = 0;
        while i < self.atoms.len() {
            let start = self.atoms[i].0;
            let (mut mass, mut first, mut count) = (0.0, 0.0, 0usize);
            let mut j = i;
            while j < self.atoms.len() && self.atoms[j].0 - start <= width {
                mass += self.atoms[j].1;
                first += self.atoms[j].0 * self.atoms[j].1;
                count += 1;
                j += 1;
            }
            let nu = if mass > 0.0 { first / mass } else { self.atoms[i..j].iter().map(|a| a.0).sum::<f64>() / count as f64 };
            out.push((nu, mass));
            i = j;
        }
        AtomicMeasure { atoms: out, clamped: self.clamped }
    }

    /// Largest mismatch between the mass near `ν` and the mass near `−ν`,
    /// grouping atoms within `width`.
    pub fn symmetry_defect(&self, width: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for &(nu, _) in &self.atoms {
            let near = |c: f64| -> f64 {
                self.atoms.iter().filter(|a| (a.0 - c).abs() <= width).map(|a| a.1).sum()
            };
            worst = worst.max((near(nu) - near(-nu)).abs());
        }
        worst
    }

    pub fn write_csv(&self, w: &mut impl Write) -> std::io::Result<()> {
        writeln!(w, "nu,weight")?;
        for (nu, wt) in &self.atoms {
            writeln!(w, "{nu:e},{wt:e}")?;
        }
        Ok(())
    }
}

impl FiniteMeasure for AtomicMeasure {
    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(nu, w)| w * f(nu)).sum()
    }
}

/// Uniform grid `start + k·step`, `k = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 || !(end > start) {
            return Err(invalid("grid needs at least two points and end > start"));
        }
        Ok(UniformGrid { start, step: (end - start) / (len - 1) as f64, len })
    }

    /// Symmetric grid on `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, len: usize) -> Result<Self> {
        UniformGrid::new(-half_width, half_width, len)
    }

    pub fn point(&self, k: usize) -> f64 {
        self.start + k as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.point(self.len - 1)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|k| self.point(k))
    }

    /// Trapezoid weights.
    pub fn trapezoid(&self) -> Vec<f64> {
        (0..self.len)
            .map(|k| if k == 0 || k + 1 == self.len { 0.5 * self.step } else { self.step })
            .collect()
    }
}

/// A density sampled on a uniform grid together with the node masses used
/// for integration. Mollified measures carry trapezoid masses; the Drude
/// family carries the exact mass of each node's cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityMeasure {
    pub grid: UniformGrid,
    pub density: Vec<f64>,
    pub masses: Vec<f64>,
}

impl DensityMeasure {
    /// A density integrated with the trapezoid rule.
    pub fn from_density(grid: UniformGrid, density: Vec<f64>) -> Result<Self> {
        if density.len() != grid.len {
            return Err(invalid("density length does not match grid"));
        }
        if density.iter().any(|v| !(*v >= 0.0)) {
            return Err(invalid("density must be non-negative"));
        }
        let masses = grid.trapezoid().iter().zip(&density).map(|(w, v)| w * v).collect();
        Ok(DensityMeasure { grid, density, masses })
    }

    /// `∫ |ρ − σ|` by the trapezoid rule on a shared grid.
    pub fn l1_distance(&self, other: &DensityMeasure) -> Result<f64> {
        if self.grid != other.grid {
            return Err(invalid("densities live on different grids"));
        }
        Ok(self
            .grid
            .trapezoid()
            .iter()
            .zip(self.density.iter().zip(&other.density))
            .map(|(w, (a, b))| w * (a - b).abs())
            .sum())
    }
}

impl FiniteMeasure for DensityMeasure {
    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.masses.iter().enumerate().map(|(k, m)| m * f(self.grid.point(k))).sum()
    }
}

/// Gaussian smoothing `Σ w_k·N(ν; ν_k, h²)` sampled on `grid`.
pub fn mollify(mu: &AtomicMeasure, bandwidth: f64, grid: &UniformGrid) -> Result<DensityMeasure> {
    if !(bandwidth > 0.0) {
        return Err(invalid("bandwidth must be positive"));
    }
    let norm = 1.0 / (bandwidth * (2.0 * PI).sqrt());
    let reach = 12.0 * bandwidth;
    let mut density = vec![0.0; grid.len];
    for &(nu, w) in mu.atoms() {
        let lo = (((nu - reach - grid.start) / grid.step).floor().max(0.0)) as usize;
        let hi = (((nu + reach - grid.start) / grid.step).ceil().max(0.0) as usize).min(grid.len);
        for (k, slot) in density.iter_mut().enumerate().take(hi).skip(lo) {
            let z = (grid.point(k) - nu) / bandwidth;
            *slot += w * norm * (-0.5 * z * z).exp();
        }
    }
    DensityMeasure::from_density(*grid, density)
}

/// `D·e^{−|t|/T}`.
pub fn drude_sigma(t: f64, weight: f64, relaxation: f64) -> f64 {
    weight * (-t.abs() / relaxation).exp()
}

/// Lorentzian density `(D/π)·T/(1 + T²ν²)`, whose cosine transform is
/// [`drude_sigma`].
pub fn drude_density(nu: f64, weight: f64, relaxation: f64) -> f64 {
    weight / PI * relaxation / (1.0 + relaxation * relaxation * nu * nu)
}

fn drude_cdf(nu: f64, weight: f64, relaxation: f64) -> f64 {
    weight * (0.5 + (relaxation * nu).atan() / PI)
}

/// The Drude measure restricted to a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrudeMeasure {
    pub measure: DensityMeasure,
    /// `D` minus the mass captured by the grid.
    pub mass_deficit: f64,
    /// Set when the grid misses more than 5% of the mass.
    pub narrow_grid: bool,
}

/// Drude measure on `grid`; each node carries the exact Lorentzian mass of
/// its cell `[ν − h/2, ν + h/2] ∩ [start, end]`.
pub fn drude_measure(weight: f64, relaxation: f64, grid: &UniformGrid) -> Result<DrudeMeasure> {
    if !(weight > 0.0) || !(relaxation > 0.0) {
        return Err(invalid("Drude weight and relaxation time must be positive"));
    }
    let (start, end, h) = (grid.start, grid.end(), grid.step);
    let density: Vec<f64> = grid.points().map(|nu| drude_density(nu, weight, relaxation)).collect();
    let masses: Vec<f64> = grid
        .points()
        .map(|nu| {
            let a = (nu - 0.5 * h).max(start);
            let b = (nu + 0.5 * h).min(end);
            drude_cdf(b, weight, relaxation) - drude_cdf(a, weight, relaxation)
        })
        .collect();
    let captured = drude_cdf(end, weight, relaxation) - drude_cdf(start, weight, relaxation);
    let mass_deficit = weight - captured;
    Ok(DrudeMeasure {
        measure: DensityMeasure { grid: *grid, density, masses },
        mass_deficit,
        narrow_grid: mass_deficit > 0.05 * weight,
    })
}

/// `∫ cos(tν)·(D/π)·T/(1+T²ν²) dν` over the whole line by adaptive quadrature.
pub fn drude_cos_transform_quadrature(t: f64, weight: f64, relaxation: f64, tol: f64) -> f64 {
    // ν = s/T maps the density onto the unit Lorentzian
    2.0 * weight
        * crate::quad::cos_integral_half_line(|s| 1.0 / (PI * (1.0 + s * s)), t / relaxation, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_atom() {
        let mu = AtomicMeasure::new(vec![(2.0, 3.0)]).unwrap();
        assert_eq!(mu.total_mass(), 3.0);
        assert_eq!(mu.moment(1), 6.0);
        assert_eq!(mu.abs_first_moment(), 9.0);
        assert!((mu.cos_transform(0.7) - 3.0 * 1.4f64.cos()).abs() < 1e-15);
    }

    #[test]
    fn symmetric_pair_odd_moments() {
        let mu = AtomicMeasure::new(vec![(1.5, 0.25), (-1.5, 0.25)]).unwrap();
        assert_eq!(mu.moment(1), 0.0);
        assert_eq!(mu.moment(3), 0.0);
        assert_eq!(mu.cos_transform(0.3), mu.cos_transform(-0.3));
    }

    #[test]
    fn clamping() {
        let mu = AtomicMeasure::new(vec![(0.0, -5e-13), (1.0, 1.0)]).unwrap();
        assert_eq!(mu.clamped(), 1);
        assert_eq!(mu.total_mass(), 1.0);
        assert!(AtomicMeasure::new(vec![(0.0, -1e-9)]).is_err());
    }

    #[test]
    fn binning_merges_close_atoms() {
        let mu = AtomicMeasure::new(vec![(1.0, 1.0), (1.0 + 1e-11, 1.0), (2.0, 1.0)]).unwrap();
        let b = mu.binned(1e-10);
        assert_eq!(b.len(), 2);
        assert_eq!(b.total_mass(), 3.0);
    }

    #[test]
    fn drude_tail_mass() {
        let grid = UniformGrid::symmetric(200.0, 40_001).unwrap();
        let d = drude_measure(1.0, 1.0, &grid).unwrap();
        let mass = d.measure.total_mass();
        assert!((mass - 1.0).abs() < 4e-3);
        assert!((d.mass_deficit - 2.0 / (PI * 200.0)).abs() < 1e-5);
        assert!(!d.narrow_grid);
        let narrow = drude_measure(1.0, 1.0, &UniformGrid::symmetric(5.0, 101).unwrap()).unwrap();
        assert!(narrow.narrow_grid);
    }

    #[test]
    fn drude_half_width() {
        let t = 4.0;
        let peak = drude_density(0.0, 1.0, t);
        assert!((drude_density(1.0 / t, 1.0, t) - 0.5 * peak).abs() < 1e-15);
        assert_eq!(drude_sigma(0.0, 2.0, 1.5), 2.0);
        assert!((drude_sigma(1.5, 2.0, 1.5) - 2.0 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn mollify_keeps_mass() {
        let mu = AtomicMeasure::new(vec![(-1.0, 0.3), (0.2, 1.1), (0.25, 0.4)]).unwrap();
        let grid = UniformGrid::symmetric(4.0, 801).unwrap();
        let rho = mollify(&mu, 0.1, &grid).unwrap();
        assert!((rho.total_mass() - mu.total_mass()).abs() < 1e-10);
        assert!(mollify(&mu, 0.0, &grid).is_err());
    }
}
