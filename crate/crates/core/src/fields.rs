//! Compactly supported pulses, their electric fields and the heat they
//! deposit in the system.
//!
//! A pulse is separable, `E(s, x) = e(s)·h(x)`, and only `‖h‖₂²` enters.
//! The field is `e(s) = −∂_s g(s/T)` for an envelope `g` and a time scale
//! `T`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::kubo::TransportCurve;
use crate::measures::AtomicMeasure;
use crate::quad::integrate;

/// Smallest accepted support radius of the Gaussian family, in widths.
pub const MIN_SUPPORT_RADIUS: f64 = 6.0;

/// The envelope `g` before time rescaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Envelope {
    /// `a·(exp(−(u−t₀)²/2w²) − exp(−r²/2))` on `|u − t₀| ≤ r·w`, zero
    /// elsewhere. The constant shift makes `g` vanish at the support edges.
    Gaussian { a: f64, t0: f64, w: f64, support_radius: f64 },
    /// Samples `g(start + k·step)`, zero at both ends.
    Sampled { grid: SampleGrid, samples: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub start: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    #[serde(flatten)]
    pub envelope: Envelope,
    pub spatial_norm_sq: f64,
    #[serde(rename = "T", default = "unit")]
    pub time_scale: f64,
}

fn unit() -> f64 {
    1.0
}

impl Default for Pulse {
    /// `a = 1`, `t₀ = 0`, `w = 0.5`, `r = 6`, `‖h‖² = 1`, `T = 1`.
    fn default() -> Self {
        Pulse {
            envelope: Envelope::Gaussian { a: 1.0, t0: 0.0, w: 0.5, support_radius: 6.0 },
            spatial_norm_sq: 1.0,
            time_scale: 1.0,
        }
    }
}

impl Pulse {
    pub fn gaussian(a: f64, t0: f64, w: f64, support_radius: f64, spatial_norm_sq: f64) -> Result<Self> {
        let p = Pulse { envelope: Envelope::Gaussian { a, t0, w, support_radius }, spatial_norm_sq, time_scale: 1.0 };
        p.validate()?;
        Ok(p)
    }

    pub fn sampled(start: f64, step: f64, samples: Vec<f64>, spatial_norm_sq: f64) -> Result<Self> {
        let p = Pulse {
            envelope: Envelope::Sampled { grid: SampleGrid { start, step }, samples },
            spatial_norm_sq,
            time_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.time_scale > 0.0 && self.time_scale.is_finite()) {
            return Err(invalid(format!("time scale must be positive, got {}", self.time_scale)));
        }
        if !(self.spatial_norm_sq >= 0.0 && self.spatial_norm_sq.is_finite()) {
            return Err(invalid("spatial_norm_sq must be a finite non-negative number"));
        }
        match &self.envelope {
            Envelope::Gaussian { a, t0, w, support_radius } => {
                if !(a.is_finite() && t0.is_finite() && *w > 0.0 && w.is_finite()) {
                    return Err(invalid("gaussian pulse needs finite a, t0 and w > 0"));
                }
                if !(*support_radius >= MIN_SUPPORT_RADIUS) {
                    return Err(invalid(format!("support radius must be at least {MIN_SUPPORT_RADIUS}")));
                }
            }
            Envelope::Sampled { grid, samples } => {
                if !(grid.step > 0.0 && grid.start.is_finite()) || samples.len() < 3 {
                    return Err(invalid("sampled pulse needs step > 0 and at least three samples"));
                }
                if samples.iter().any(|v| !v.is_finite()) {
                    return Err(invalid("sampled pulse has non-finite samples"));
                }
                if samples[0] != 0.0 || samples[samples.len() - 1] != 0.0 {
                    return Err(invalid("sampled envelope must vanish at both ends"));
                }
            }
        }
        Ok(())
    }

    /// `[s_start, s_end]` after rescaling.
    pub fn support(&self) -> (f64, f64) {
        let tt = self.time_scale;
        match &self.envelope {
            Envelope::Gaussian { t0, w, support_radius, .. } => {
                (tt * (t0 - support_radius * w), tt * (t0 + support_radius * w))
            }
            Envelope::Sampled { grid, samples } => {
                (tt * grid.start, tt * (grid.start + grid.step * (samples.len() - 1) as f64))
            }
        }
    }

    /// `g(s/T)`.
    pub fn envelope_at(&self, s: f64) -> f64 {
        let u = s / self.time_scale;
        match &self.envelope {
            Envelope::Gaussian { a, t0, w, support_radius } => {
                let z = (u - t0) / w;
                if z.abs() > *support_radius {
                    0.0
                } else {
                    a * ((-0.5 * z * z).exp() - (-0.5 * support_radius * support_radius).exp())
                }
            }
            Envelope::Sampled { grid, samples } => interpolate(grid.start, grid.step, samples, u),
        }
    }

    /// `e(s)`; zero outside the support.
    pub fn electric_field(&self, s: f64) -> f64 {
        let tt = self.time_scale;
        let u = s / tt;
        match &self.envelope {
            Envelope::Gaussian { a, t0, w, support_radius } => {
                let z = (u - t0) / w;
                if z.abs() > *support_radius {
                    0.0
                } else {
                    a * z / w * (-0.5 * z * z).exp() / tt
                }
            }
            Envelope::Sampled { grid, samples } => {
                let field = sampled_field(grid.step, samples);
                interpolate(grid.start - 2.0 * grid.step, grid.step, &field, u) / tt
            }
        }
    }

    /// `A^{(T)}(s) = A(s/T)`, composed with any earlier rescaling.
    pub fn time_rescale(&self, tt: f64) -> Result<Pulse> {
        if !(tt > 0.0 && tt.is_finite()) {
            return Err(invalid(format!("time scale must be positive, got {tt}")));
        }
        Ok(Pulse { time_scale: self.time_scale * tt, ..self.clone() })
    }
}

fn interpolate(start: f64, step: f64, values: &[f64], u: f64) -> f64 {
    let x = (u - start) / step;
    if !(x >= 0.0) || x > (values.len() - 1) as f64 {
        return 0.0;
    }
    let k = (x.floor() as usize).min(values.len() - 2);
    let f = x - k as f64;
    values[k] * (1.0 - f) + values[k + 1] * f
}

/// `−g′` by fourth-order centered differences with zero padding, on the
/// grid extended by two points on each side.
fn sampled_field(step: f64, samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let g = |k: isize| if k < 0 || k >= n as isize { 0.0 } else { samples[k as usize] };
    (-2..n as isize + 2)
        .map(|k| -(-g(k + 2) + 8.0 * g(k + 1) - 8.0 * g(k - 1) + g(k - 2)) / (12.0 * step))
        .collect()
}

/// Nodes, trapezoid weights and field values of the pulse on a uniform grid
/// of spacing `step`.
pub fn field_samples(pulse: &Pulse, step: f64) -> Result<Vec<(f64, f64, f64)>> {
    pulse.validate()?;
    if !(step > 0.0) {
        return Err(invalid("sampling step must be positive"));
    }
    let tt = pulse.time_scale;
    match &pulse.envelope {
        Envelope::Gaussian { .. } => {
            let (a, b) = pulse.support();
            let mut half = ((0.5 * (b - a)) / step).ceil() as usize;
            if half == 0 {
                half = 1;
            }
            let c = 0.5 * (a + b);
            let k_max = 2 * half;
            Ok((0..=k_max)
                .map(|k| {
                    let s = c + (k as f64 - half as f64) * step;
                    let w = if k == 0 || k == k_max { 0.5 * step } else { step };
                    (s, w, pulse.electric_field(s))
                })
                .collect())
        }
        Envelope::Sampled { grid, samples } => {
            let own = grid.step * tt;
            if ((own - step) / step).abs() > 1e-12 {
                return Err(invalid(format!("sampled pulse step {own} differs from the requested step {step}")));
            }
            let field = sampled_field(grid.step, samples);
            let s0 = tt * (grid.start - 2.0 * grid.step);
            Ok(field.iter().enumerate().map(|(k, e)| (s0 + k as f64 * step, step, e / tt)).collect())
        }
    }
}

/// `∫ e(s) ds`.
pub fn field_integral(pulse: &Pulse) -> Result<f64> {
    pulse.validate()?;
    match &pulse.envelope {
        Envelope::Gaussian { .. } => {
            let (a, b) = pulse.support();
            Ok(integrate(|s| pulse.electric_field(s), a, b, 1e-14))
        }
        Envelope::Sampled { grid, .. } => {
            let h = grid.step * pulse.time_scale;
            Ok(field_samples(pulse, h)?.iter().map(|(_, w, e)| w * e).sum())
        }
    }
}

/// `∫ s·e(s) ds`.
pub fn pulse_first_moment(pulse: &Pulse) -> Result<f64> {
    pulse.validate()?;
    match &pulse.envelope {
        Envelope::Gaussian { .. } => {
            let (a, b) = pulse.support();
            Ok(integrate(|s| s * pulse.electric_field(s), a, b, 1e-14))
        }
        Envelope::Sampled { grid, .. } => {
            let h = grid.step * pulse.time_scale;
            Ok(field_samples(pulse, h)?.iter().map(|(s, w, e)| s * w * e).sum())
        }
    }
}

/// `∫ g(s/T) ds`, equal to [`pulse_first_moment`] after integration by parts.
pub fn envelope_integral(pulse: &Pulse) -> Result<f64> {
    pulse.validate()?;
    match &pulse.envelope {
        Envelope::Gaussian { .. } => {
            let (a, b) = pulse.support();
            Ok(integrate(|s| pulse.envelope_at(s), a, b, 1e-14))
        }
        Envelope::Sampled { grid, samples } => Ok(grid.step * pulse.time_scale * samples.iter().sum::<f64>()),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatRecord {
    pub q_time: f64,
    pub q_freq: f64,
    /// The `σ_p` part of `q_time`.
    pub q_paramagnetic: f64,
    /// The `σ_d` part of `q_time`.
    pub q_diamagnetic: f64,
    /// `∫e` on the sampling grid.
    pub field_integral: f64,
    pub step: f64,
}

/// Heat deposited by `pulse`, once in time,
///
/// `Q = ‖h‖² ∫ds₁ ∫_{s₂≤s₁} ds₂ (σ_d + σ_p(s₁ − s₂)) e(s₂) e(s₁)`,
///
/// and once in frequency, `Q = ½‖h‖² ∫ |ê(ν)|² μ_p(dν)`. The time integrals
/// use the trapezoid rule on the step of the `σ_p` curve, which must be a
/// uniform grid from zero, and `ê` is the discrete transform on the same
/// nodes.
pub fn heat_production(
    sigma_p: &TransportCurve,
    sigma_d: f64,
    mu_p: &AtomicMeasure,
    pulse: &Pulse,
) -> Result<HeatRecord> {
    let h = sigma_p.uniform_step().ok_or_else(|| invalid("heat production needs a uniform σ_p grid from 0"))?;
    let samples = field_samples(pulse, h)?;
    let span = (samples.len() - 1) as f64 * h;
    let t_max = *sigma_p.t_grid.last().unwrap_or(&0.0);
    if span > t_max * (1.0 + 1e-12) {
        return Err(invalid(format!("pulse support of length {span} exceeds the σ_p grid range {t_max}")));
    }
    let we: Vec<f64> = samples.iter().map(|(_, w, e)| w * e).collect();
    let n = we.len();
    // Toeplitz structure: Σ_{k,m} we_k we_m σ_p(|k−m|h)
    let mut para = 0.0;
    for lag in 0..n {
        let c: f64 = (0..n - lag).map(|k| we[k] * we[k + lag]).sum();
        para += if lag == 0 { c } else { 2.0 * c } * sigma_p.values[lag];
    }
    let total: f64 = we.iter().sum();
    let sn = pulse.spatial_norm_sq;
    let q_paramagnetic = 0.5 * sn * para;
    let q_diamagnetic = 0.5 * sn * sigma_d * total * total;
    let mut freq = 0.0;
    for &(nu, w) in mu_p.atoms() {
        let hat: Complex64 =
            samples.iter().zip(&we).map(|((s, _, _), x)| Complex64::from_polar(*x, -nu * s)).sum();
        freq += w * hat.norm_sqr();
    }
    Ok(HeatRecord {
        q_time: q_paramagnetic + q_diamagnetic,
        q_freq: 0.5 * sn * freq,
        q_paramagnetic,
        q_diamagnetic,
        field_integral: total,
        step: h,
    })
}
