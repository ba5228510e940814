//! The integrated flow identity
//! `d/dt ∫φ dμ = ∫(∂_tφ − div_M Dφ − |H|²φ) dμ`.

use serde::{Deserialize, Serialize};

use crate::geometry::{SampleBoundary, SurfaceSample};

use super::report::{Monitor, MonitorReport, Observation};
use super::TOL_IDENTITY;

/// Test fields with closed-form derivatives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "field", rename_all = "snake_case", deny_unknown_fields)]
pub enum TestField {
    /// `(1 − |x−c|²/r²)₊⁴`.
    Bump { center: Vec<f64>, radius: f64 },
    /// `φ_ρ³` centred at `(t0, x0)`.
    PhiCubed { rho: f64, t0: f64, x0: Vec<f64> },
    /// A constant; only meaningful on closed surfaces.
    Constant { value: f64 },
}

/// Value, time derivative, gradient and Hessian (row-major) of a field.
struct Jet {
    phi: f64,
    dt: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl TestField {
    fn jet(&self, n: usize, t: f64, x: &[f64]) -> Jet {
        let d = x.len();
        let mut jet = Jet {
            phi: 0.0,
            dt: 0.0,
            grad: vec![0.0; d],
            hess: vec![0.0; d * d],
        };
        match self {
            TestField::Constant { value } => jet.phi = *value,
            TestField::Bump { center, radius } => {
                let y: Vec<f64> = x.iter().zip(center).map(|(a, b)| a - b).collect();
                let r2 = radius * radius;
                let q = 1.0 - y.iter().map(|v| v * v).sum::<f64>() / r2;
                if q > 0.0 {
                    jet.phi = q.powi(4);
                    for i in 0..d {
                        jet.grad[i] = -8.0 * q.powi(3) * y[i] / r2;
                        for j in 0..d {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            jet.hess[i * d + j] =
                                48.0 * q * q * y[i] * y[j] / (r2 * r2) - 8.0 * q.powi(3) * delta / r2;
                        }
                    }
                }
            }
            TestField::PhiCubed { rho, t0, x0 } => {
                let y: Vec<f64> = x.iter().zip(x0).map(|(a, b)| a - b).collect();
                let r2 = rho * rho;
                let p = 1.0 - (y.iter().map(|v| v * v).sum::<f64>() + 2.0 * n as f64 * (t - t0)) / r2;
                if p > 0.0 {
                    jet.phi = p.powi(3);
                    jet.dt = -6.0 * n as f64 * p * p / r2;
                    for i in 0..d {
                        jet.grad[i] = -6.0 * p * p * y[i] / r2;
                        for j in 0..d {
                            let delta = if i == j { 1.0 } else { 0.0 };
                            jet.hess[i * d + j] =
                                24.0 * p * y[i] * y[j] / (r2 * r2) - 6.0 * p * p * delta / r2;
                        }
                    }
                }
            }
        }
        jet
    }

    /// Ball containing the support, if bounded.
    fn support(&self) -> Option<(&[f64], f64)> {
        match self {
            TestField::Constant { .. } => None,
            TestField::Bump { center, radius } => Some((center, *radius)),
            TestField::PhiCubed { rho, x0, .. } => Some((x0, *rho)),
        }
    }
}

/// The four integrals of the identity at one time.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct BrakkeTerms {
    /// `∫φ`.
    pub integral: f64,
    /// `∫∂_tφ`.
    pub time: f64,
    /// `∫div_M Dφ`.
    pub divergence: f64,
    /// `∫|H|²φ`.
    pub curvature: f64,
    /// `∫max(|∂_tφ|, |div_M Dφ|, |H|²φ)`, the size of the integrands
    /// before cancellation.
    pub magnitude: f64,
}

impl BrakkeTerms {
    pub fn rhs(&self) -> f64 {
        self.time - self.divergence - self.curvature
    }
}

/// Evaluates the integrals over a sample; `div_M Dφ = tr D²φ − νᵀD²φν`.
pub fn brakke_terms(sample: &SurfaceSample, field: &TestField, t: f64) -> BrakkeTerms {
    let d = sample.ambient_dim;
    let n = d.saturating_sub(1);
    let mut out = BrakkeTerms::default();
    for i in 0..sample.len() {
        let w = sample.weights[i];
        let jet = field.jet(n, t, &sample.points[i]);
        if jet.phi == 0.0 && jet.hess.iter().all(|&h| h == 0.0) {
            continue;
        }
        let nu = &sample.normals[i];
        let mut trace = 0.0;
        let mut nn = 0.0;
        for a in 0..d {
            trace += jet.hess[a * d + a];
            for b in 0..d {
                nn += nu[a] * jet.hess[a * d + b] * nu[b];
            }
        }
        let h = sample.mean_curvature[i];
        out.integral += w * jet.phi;
        out.time += w * jet.dt;
        out.divergence += w * (trace - nn);
        out.curvature += w * h * h * jet.phi;
        out.magnitude += w * jet.dt.abs().max((trace - nn).abs()).max(h * h * jet.phi.abs());
    }
    out
}

/// Residual `|Δ∫φ − Δt·trapezoid(RHS)|` between consecutive records,
/// bounded by `tol` times the larger of `|Δ∫φ|` and the integrated size
/// of the right-hand side integrands.
pub struct BrakkeMonitor {
    field: TestField,
    tol: f64,
    prev: Option<(f64, BrakkeTerms)>,
}

impl BrakkeMonitor {
    pub fn new(field: TestField) -> Self {
        Self {
            field,
            tol: TOL_IDENTITY,
            prev: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

impl Monitor for BrakkeMonitor {
    fn id(&self) -> &str {
        "brakke"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        let id = "brakke";
        match (self.field.support(), &obs.sample.boundary) {
            (None, SampleBoundary::None) => {}
            (None, _) => {
                return MonitorReport::skipped(id, obs.t, "field not compactly supported in the domain")
            }
            (Some((c, r)), b) => {
                if b.clearance(c) <= r {
                    return MonitorReport::skipped(id, obs.t, "support leaves the domain");
                }
            }
        }
        let terms = brakke_terms(obs.sample, &self.field, obs.t);
        let report = match self.prev {
            None => MonitorReport::check(id, obs.t, 0.0, 0.0, 0.0),
            Some((t0, p)) => {
                let dt = obs.t - t0;
                let lhs = terms.integral - p.integral;
                let rhs = dt * 0.5 * (terms.rhs() + p.rhs());
                let scale = lhs.abs().max(dt * 0.5 * (terms.magnitude + p.magnitude));
                MonitorReport::check(id, obs.t, (lhs - rhs).abs(), self.tol * scale, 0.0)
                    .with_note(format!("relative {}", if scale > 0.0 { (lhs - rhs).abs() / scale } else { 0.0 }))
            }
        };
        self.prev = Some((obs.t, terms));
        report
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Curve;

    #[test]
    fn circle_terms() {
        // on the unit circle: ∫|x|² = 2π, div_M D|x|² = 2, κ² = 1
        let c = Curve::regular_polygon([0.0, 0.0], 1.0, 1024, 0.0).unwrap();
        let s = c.sample();
        let t = brakke_terms(&s, &TestField::Constant { value: 1.0 }, 0.0);
        let tau = std::f64::consts::TAU;
        assert!((t.integral - tau).abs() < 1e-4);
        assert!((t.curvature - tau).abs() < 1e-4);
        assert_eq!(t.divergence, 0.0);
        // shrinking unit circle, dr/dt = −1/r: ∫φ = 2πr·g(r), g = (1 − r²/100)⁴,
        // so d/dt ∫φ = −2π(g + r·g') at r = 1
        let big = TestField::Bump { center: vec![0.0, 0.0], radius: 10.0 };
        let b = brakke_terms(&s, &big, 0.0);
        let g = 0.99f64.powi(4);
        let dg = 4.0 * 0.99f64.powi(3) * (-0.02);
        let want = -tau * (g + dg);
        assert!((b.rhs() - want).abs() < 1e-3 * want.abs(), "{} vs {want}", b.rhs());
    }

    #[test]
    fn disjoint_support_is_zero() {
        let c = Curve::regular_polygon([0.0, 0.0], 1.0, 64, 0.0).unwrap();
        let f = TestField::Bump { center: vec![5.0, 5.0], radius: 1.0 };
        assert_eq!(brakke_terms(&c.sample(), &f, 0.0), BrakkeTerms::default());
    }
}
