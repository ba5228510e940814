//! Test functions and the backward heat kernel.

use serde::{Deserialize, Serialize};

use crate::geometry::SurfaceSample;
use crate::{Error, Result};

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// `φ_ρ = (1 − ρ^{−2}(|x−x₀|² + 2n(t−t₀)))₊` for an `n`-dimensional flow.
pub fn phi_rho(rho: f64, n: usize, t0: f64, x0: &[f64], t: f64, x: &[f64]) -> f64 {
    (1.0 - (dist_sq(x, x0) + 2.0 * n as f64 * (t - t0)) / (rho * rho)).max(0.0)
}

/// Target of the backward heat kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelPoint {
    pub t0: f64,
    pub x0: Vec<f64>,
}

/// `(4π(t₀−t))^{−n/2} exp(−|x−x₀|²/(4(t₀−t)))`, defined for `t < t₀`.
pub fn heat_kernel(kp: &KernelPoint, n: usize, t: f64, x: &[f64]) -> Result<f64> {
    let tau = kp.t0 - t;
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::domain(format!("heat kernel at t = {t} >= t0 = {}", kp.t0)));
    }
    let pre = (4.0 * std::f64::consts::PI * tau).powf(-0.5 * n as f64);
    Ok(pre * (-dist_sq(x, &kp.x0) / (4.0 * tau)).exp())
}

/// Truncation radius in units of `√(t₀−t)`; the kernel there is `e^{−9}`
/// times its peak.
pub const KERNEL_TRUNCATION: f64 = 6.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DensityRatio {
    pub ratio: f64,
    /// `ratio > 1 + d₀`.
    pub flagged: bool,
    /// The sample stops closer to `x₀` than `6√(t₀−t)`.
    pub truncated: bool,
    /// Distance from `x₀` to the edge of the sample.
    pub sample_radius: f64,
}

/// `Σ w Φ` over the sample, flagged against `1 + d₀`.
pub fn gaussian_density_ratio(
    sample: &SurfaceSample,
    kp: &KernelPoint,
    t: f64,
    d0: f64,
) -> Result<DensityRatio> {
    let n = sample.ambient_dim.saturating_sub(1);
    if kp.x0.len() != sample.ambient_dim {
        return Err(Error::domain("kernel point dimension mismatch"));
    }
    let mut ratio = 0.0;
    for (p, w) in sample.points.iter().zip(&sample.weights) {
        ratio += w * heat_kernel(kp, n, t, p)?;
    }
    let sample_radius = sample.boundary.clearance(&kp.x0);
    Ok(DensityRatio {
        ratio,
        flagged: ratio > 1.0 + d0,
        truncated: sample_radius < KERNEL_TRUNCATION * (kp.t0 - t).sqrt(),
        sample_radius,
    })
}

/// Built-in choices of `η` for the localized test function `Υ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum EtaForm {
    /// `η ≡ 1`, `L = 0`; `Υ = ϱ² φ_ϱ`.
    Constant,
    /// `η = (|x̃ − ỹ₀| − r₀)₊ / 2`, `L = 1/2`.
    Slab { r0: f64 },
    /// `η = (1 − w^{−2}(|Q|² + 2n(t−t₁)))₊` with `Q` the last two
    /// coordinates minus `center`, `L = 2/w`.
    Split { width: f64, center: [f64; 2] },
}

impl EtaForm {
    pub fn id(&self) -> &'static str {
        match self {
            EtaForm::Constant => "ups_const",
            EtaForm::Slab { .. } => "ups_slab",
            EtaForm::Split { .. } => "ups_split",
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match self {
            EtaForm::Constant => 0.0,
            EtaForm::Slab { .. } => 0.5,
            EtaForm::Split { width, .. } => 2.0 / width,
        }
    }

    /// Looks up a form by name with its parameters.
    pub fn from_id(id: &str, r0: f64, width: f64, center: [f64; 2]) -> Result<Self> {
        match id {
            "constant" | "ups_const" => Ok(EtaForm::Constant),
            "slab" | "ups_slab" => Ok(EtaForm::Slab { r0 }),
            "split" | "ups_split" => Ok(EtaForm::Split { width, center }),
            other => Err(Error::config("monitors.upsilon.form", format!("unknown form `{other}`"))),
        }
    }

    fn eta(&self, n: usize, t1: f64, y0: &[f64], t: f64, x: &[f64]) -> f64 {
        match self {
            EtaForm::Constant => 1.0,
            EtaForm::Slab { r0 } => {
                let k = x.len() - 1;
                0.5 * ((x[k] - y0[k]).abs() - r0).max(0.0)
            }
            EtaForm::Split { width, center } => {
                let k = x.len();
                let q0 = x[k - 2] - center[0];
                let q1 = x[k - 1] - center[1];
                (1.0 - (q0 * q0 + q1 * q1 + 2.0 * n as f64 * (t - t1)) / (width * width)).max(0.0)
            }
        }
    }
}

/// `Υ = ((ϱ² − |x−y₀|²) η − (2n + Lϱ)(t − t₁))₊`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Upsilon {
    pub form: EtaForm,
    pub varrho: f64,
    pub y0: Vec<f64>,
    pub t1: f64,
    pub n: usize,
}

impl Upsilon {
    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        let r2 = self.varrho * self.varrho - dist_sq(x, &self.y0);
        if r2 <= 0.0 {
            return 0.0;
        }
        let eta = self.form.eta(self.n, self.t1, &self.y0, t, x);
        let l = self.form.lipschitz();
        (r2 * eta - (2.0 * self.n as f64 + l * self.varrho) * (t - self.t1)).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GraphPatch, PatchDomain, Surface};
    use std::f64::consts::PI;

    #[test]
    fn phi_values() {
        assert_eq!(phi_rho(1.0, 1, 0.0, &[0.0, 0.0], 0.0, &[0.0, 0.0]), 1.0);
        assert_eq!(phi_rho(1.0, 1, 0.0, &[0.0, 0.0], 0.1, &[0.9, 0.0]), 0.0);
        assert_eq!(phi_rho(1.0, 1, 0.0, &[0.0, 0.0], 0.25, &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn kernel_values() {
        let kp = KernelPoint {
            t0: 1.0 / (4.0 * PI),
            x0: vec![0.0, 0.0],
        };
        assert!((heat_kernel(&kp, 1, 0.0, &[0.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(heat_kernel(&kp, 1, kp.t0, &[0.0, 0.0]).is_err());
        let kp = KernelPoint { t0: 1.0, x0: vec![0.0, 0.0] };
        let peak = heat_kernel(&kp, 1, 0.0, &[0.0, 0.0]).unwrap();
        let far = heat_kernel(&kp, 1, 0.0, &[6.0, 0.0]).unwrap();
        assert!((far / peak - (-9.0f64).exp()).abs() < 1e-15);
    }

    fn flat(n: usize, tau: f64, offset: f64) -> Surface {
        let r = KERNEL_TRUNCATION * tau.sqrt();
        Surface::Graph(
            GraphPatch::from_fn(vec![0.0; n], r, tau.sqrt() / 10.0, PatchDomain::Ball, |_| offset)
                .unwrap(),
        )
    }

    #[test]
    fn plane_density_is_one() {
        for n in [1, 2] {
            for tau in [1e-4, 1e-2, 1.0] {
                let s = flat(n, tau, 0.0).sample();
                let kp = KernelPoint { t0: tau, x0: vec![0.0; n + 1] };
                let d = gaussian_density_ratio(&s, &kp, 0.0, 0.1).unwrap();
                assert!((d.ratio - 1.0).abs() < 1e-3, "n={n} tau={tau}: {}", d.ratio);
                assert!(!d.flagged);
                assert!(!d.truncated);
            }
        }
    }

    #[test]
    fn shifted_plane() {
        let tau = 0.01;
        let s = flat(1, tau, 3.0 * tau.sqrt()).sample();
        let kp = KernelPoint { t0: tau, x0: vec![0.0, 0.0] };
        let d = gaussian_density_ratio(&s, &kp, 0.0, 0.1).unwrap();
        assert!((d.ratio / (-9.0f64 / 4.0).exp() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn upsilon_forms() {
        let u = Upsilon {
            form: EtaForm::Constant,
            varrho: 0.5,
            y0: vec![0.0, 0.0],
            t1: 0.0,
            n: 1,
        };
        assert_eq!(u.eval(0.0, &[0.0, 0.0]), 0.25);
        let s = Upsilon {
            form: EtaForm::Slab { r0: 0.1 },
            ..u.clone()
        };
        assert_eq!(s.eval(0.0, &[0.0, 0.05]), 0.0);
        assert!(s.eval(0.0, &[0.0, 0.3]) > 0.0);
        assert!(EtaForm::from_id("wedge", 0.1, 0.1, [0.0, 0.0]).is_err());
    }
}
