use crate::geometry::{segment_length_in_ball, Cylinder, Surface, SurfaceSample};
use crate::graphicality::is_graphical;
use crate::{Error, Result};

use super::kernels::{gaussian_density_ratio, phi_rho, KernelPoint, Upsilon};
use super::report::{Monitor, MonitorReport, Observation};
use super::TOL_MONO;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `H^n(M ∩ B(center, r))`: exact clipping of polylines (curves and 1-D
/// graphs), node quadrature for 2-D graphs.
pub fn measure_in_ball(surface: &Surface, sample: &SurfaceSample, center: &[f64], r: f64) -> f64 {
    match surface {
        Surface::Curve(c) => c.length_in_ball([center[0], center[1]], r),
        Surface::Graph(p) if p.dim() == 1 => {
            let pts: Vec<[f64; 2]> = p
                .active_nodes()
                .map(|i| [p.node_position(i)[0], p.values()[i]])
                .collect();
            pts.windows(2)
                .map(|w| segment_length_in_ball(w[0], w[1], [center[0], center[1]], r))
                .sum()
        }
        Surface::Graph(_) => sample.integrate(|p| if dist(p, center) < r { 1.0 } else { 0.0 }),
    }
}

type Integrand = Box<dyn Fn(f64, &[f64]) -> f64 + Send>;

/// Checks that `∫ ψ(t, ·) dμ_t` does not increase between records, for
/// `ψ = φ³` or `Υ³`.
pub struct MonotoneIntegral {
    id: String,
    integrand: Integrand,
    center: Vec<f64>,
    support: f64,
    tol_rel: f64,
    first: Option<f64>,
    prev: Option<f64>,
}

impl MonotoneIntegral {
    /// `∫ φ_ρ³` centred at `(t0, x0)`.
    pub fn phi(rho: f64, n: usize, t0: f64, x0: Vec<f64>) -> Self {
        let c = x0.clone();
        Self::new(
            "phi",
            Box::new(move |t, x| phi_rho(rho, n, t0, &c, t, x).powi(3)),
            x0,
            rho,
        )
    }

    pub fn upsilon(u: Upsilon) -> Self {
        let (id, y0, r) = (u.form.id(), u.y0.clone(), u.varrho);
        Self::new(id, Box::new(move |t, x| u.eval(t, x).powi(3)), y0, r)
    }

    pub fn new(id: &str, integrand: Integrand, center: Vec<f64>, support: f64) -> Self {
        Self {
            id: id.to_string(),
            integrand,
            center,
            support,
            tol_rel: TOL_MONO,
            first: None,
            prev: None,
        }
    }

    pub fn with_tolerance(mut self, tol_rel: f64) -> Self {
        self.tol_rel = tol_rel;
        self
    }
}

impl Monitor for MonotoneIntegral {
    fn id(&self) -> &str {
        &self.id
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        let clearance = obs.sample.boundary.clearance(&self.center);
        if clearance <= self.support {
            return MonitorReport::skipped(&self.id, obs.t, "support leaves the domain");
        }
        let value = obs.sample.integrate(|x| (self.integrand)(obs.t, x));
        let first = *self.first.get_or_insert(value);
        let tol = self.tol_rel * first.abs();
        let report = match self.prev {
            None => MonitorReport::check(&self.id, obs.t, 0.0, 0.0, tol)
                .with_note(format!("initial integral {value}")),
            Some(p) => MonitorReport::check(&self.id, obs.t, value - p, 0.0, tol),
        };
        self.prev = Some(value);
        report
    }
}

/// `μ_t(B(y₀, ρ/2)) ≤ 8 μ_{s₁}(B(y₀, ρ))` while `t − s₁ < ρ²/(8n)`.
pub struct MeasureMonitor {
    y0: Vec<f64>,
    rho: f64,
    start: Option<(f64, f64)>,
}

impl MeasureMonitor {
    pub fn new(y0: Vec<f64>, rho: f64) -> Self {
        Self { y0, rho, start: None }
    }
}

impl Monitor for MeasureMonitor {
    fn id(&self) -> &str {
        "measure"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        if obs.sample.boundary.clearance(&self.y0) <= self.rho {
            return MonitorReport::skipped("measure", obs.t, "ball leaves the domain");
        }
        let n = obs.surface.dim() as f64;
        let (s1, base) = *self.start.get_or_insert_with(|| {
            (obs.t, measure_in_ball(obs.surface, obs.sample, &self.y0, self.rho))
        });
        if obs.t - s1 >= self.rho * self.rho / (8.0 * n) {
            return MonitorReport::skipped("measure", obs.t, "time window exceeded");
        }
        let value = measure_in_ball(obs.surface, obs.sample, &self.y0, 0.5 * self.rho);
        let bound = 8.0 * base;
        MonitorReport::check("measure", obs.t, value, bound, 1e-9 * bound)
    }
}

/// `M_t ∩ C(x₀,R,R) ⊂ C(x₀, R, r₀ + Ĉ(t−t₁)/R)`.
pub struct HeightMonitor {
    x0: Vec<f64>,
    r: f64,
    r0: f64,
    c_hat: f64,
    t1: f64,
}

/// Largest `|x̃ − x̃₀|` over sample points with `|x − x₀| < radius`.
fn max_height_in_ball(sample: &SurfaceSample, x0: &[f64], radius: f64) -> f64 {
    let k = x0.len() - 1;
    sample
        .points
        .iter()
        .filter(|p| dist(p, x0) < radius)
        .map(|p| (p[k] - x0[k]).abs())
        .fold(0.0, f64::max)
}

impl HeightMonitor {
    /// With `r0 = None`, `r₀` is the height of `M_{t₁} ∩ B(x₀, 2R)`;
    /// a supplied `r0` must satisfy the slab condition on the initial state.
    pub fn new(initial: &SurfaceSample, t1: f64, x0: Vec<f64>, r: f64, r0: Option<f64>, c_hat: f64) -> Result<Self> {
        let measured = max_height_in_ball(initial, &x0, 2.0 * r);
        let r0 = match r0 {
            None => measured,
            Some(r0) if measured <= r0 => r0,
            Some(r0) => {
                return Err(Error::config(
                    "monitors.height.r0",
                    format!("initial surface reaches height {measured} > r0 = {r0} in B(x0, 2R)"),
                ))
            }
        };
        Ok(Self { x0, r, r0, c_hat, t1 })
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }
}

impl Monitor for HeightMonitor {
    fn id(&self) -> &str {
        "height"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        if obs.sample.boundary.clearance(&self.x0) < 2.0 * self.r * (1.0 - 1e-9) {
            return MonitorReport::skipped("height", obs.t, "B(x0, 2R) leaves the domain");
        }
        let cyl = Cylinder::new(self.x0.clone(), self.r, self.r).expect("valid cylinder");
        let k = self.x0.len() - 1;
        let value = obs
            .sample
            .points
            .iter()
            .filter(|p| cyl.contains(p))
            .map(|p| (p[k] - self.x0[k]).abs())
            .fold(0.0, f64::max);
        let bound = self.r0 + self.c_hat * (obs.t - self.t1) / self.r;
        MonitorReport::check("height", obs.t, value, bound, 1e-9 * self.r)
    }
}

/// Ecker–Huisken gradient estimate
/// `v (1 − ρ^{−2}(|x−x₀|² + 2n(t−t₁))) ≤ sup_{M_{t₁} ∩ B(x₀,ρ)} v`.
pub struct GradientEhMonitor {
    x0: Vec<f64>,
    rho: f64,
    tol_rel: f64,
    start: Option<(f64, f64)>,
    lost: bool,
}

impl GradientEhMonitor {
    pub fn new(x0: Vec<f64>, rho: f64) -> Self {
        Self {
            x0,
            rho,
            tol_rel: 1e-6,
            start: None,
            lost: false,
        }
    }

    /// `v = 1/|ν·e_{n+1}|` over points in `B(x₀, radius)`, or `None` when
    /// `ν·e_{n+1}` vanishes or changes sign there.
    fn v_values(&self, sample: &SurfaceSample, radius: f64) -> Option<Vec<(usize, f64)>> {
        let k = sample.ambient_dim - 1;
        let mut sign = 0.0f64;
        let mut out = Vec::new();
        for (i, p) in sample.points.iter().enumerate() {
            if dist(p, &self.x0) >= radius {
                continue;
            }
            let c = sample.normals[i][k];
            if c == 0.0 || (sign != 0.0 && c.signum() != sign) {
                return None;
            }
            sign = c.signum();
            out.push((i, 1.0 / c.abs()));
        }
        Some(out)
    }
}

impl Monitor for GradientEhMonitor {
    fn id(&self) -> &str {
        "grad_eh"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        let id = "grad_eh";
        if self.lost {
            return MonitorReport::skipped(id, obs.t, "normal lost its vertical component");
        }
        if obs.sample.boundary.clearance(&self.x0) <= self.rho {
            return MonitorReport::skipped(id, obs.t, "ball leaves the domain");
        }
        let n = obs.surface.dim() as f64;
        if self.start.is_none() {
            match self.v_values(obs.sample, self.rho) {
                Some(v) => {
                    let sup = v.iter().map(|x| x.1).fold(1.0, f64::max);
                    self.start = Some((obs.t, sup));
                }
                None => {
                    self.lost = true;
                    return MonitorReport::skipped(id, obs.t, "initial surface not graphical in the ball");
                }
            }
        }
        let (t1, bound) = self.start.expect("set above");
        let r2 = self.rho * self.rho - 2.0 * n * (obs.t - t1);
        if r2 <= 0.0 {
            return MonitorReport::skipped(id, obs.t, "shrinking radius reached zero");
        }
        let Some(v) = self.v_values(obs.sample, r2.sqrt()) else {
            self.lost = true;
            return MonitorReport::skipped(id, obs.t, "normal lost its vertical component");
        };
        let value = v
            .iter()
            .map(|&(i, vi)| {
                let p = &obs.sample.points[i];
                let d2 = dist(p, &self.x0).powi(2);
                vi * (1.0 - (d2 + 2.0 * n * (obs.t - t1)) / (self.rho * self.rho))
            })
            .fold(0.0, f64::max);
        MonitorReport::check(id, obs.t, value, bound, self.tol_rel * bound)
    }
}

/// Ecker–Huisken curvature estimate on `B^n(x̂₀, ϱ)` under graphicality in
/// `C(x₀, 2ϱ, Γ)`:
/// `|A|² ≤ Ĉ((s−s₁)^{−1} + ϱ^{−2}) sup_{[s₁,s]} sup (1+|Df|²)²`.
pub struct CurvatureEhMonitor {
    x0: Vec<f64>,
    varrho: f64,
    gamma: f64,
    c_hat: f64,
    s1: Option<f64>,
    sup_w4: f64,
    lost: bool,
}

impl CurvatureEhMonitor {
    pub fn new(x0: Vec<f64>, varrho: f64, gamma: f64, c_hat: f64) -> Self {
        Self {
            x0,
            varrho,
            gamma,
            c_hat,
            s1: None,
            sup_w4: 0.0,
            lost: false,
        }
    }
}

impl Monitor for CurvatureEhMonitor {
    fn id(&self) -> &str {
        "curv_eh"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        let id = "curv_eh";
        if self.lost {
            return MonitorReport::skipped(id, obs.t, "graphicality in C(x0, 2rho, Gamma) lost");
        }
        let big = match Cylinder::new(self.x0.clone(), 2.0 * self.varrho, self.gamma) {
            Ok(c) => c,
            Err(e) => return MonitorReport::skipped(id, obs.t, e.to_string()),
        };
        let rep = match is_graphical(obs.surface, &big, None) {
            Ok(r) => r,
            Err(e) => return MonitorReport::skipped(id, obs.t, e.to_string()),
        };
        let Some(ex) = rep.extraction else {
            self.lost = true;
            return MonitorReport::skipped(id, obs.t, "graphicality in C(x0, 2rho, Gamma) lost");
        };
        self.sup_w4 = self.sup_w4.max((1.0 + ex.sup_grad * ex.sup_grad).powi(2));
        let s1 = *self.s1.get_or_insert(obs.t);
        if obs.t <= s1 {
            return MonitorReport::skipped(id, obs.t, "s = s1");
        }
        let small = big.with_radius(self.varrho);
        let value = obs
            .sample
            .points
            .iter()
            .zip(&obs.sample.curvature)
            .filter(|(p, _)| small.contains(p))
            .map(|(_, a)| a * a)
            .fold(0.0, f64::max);
        let bound = self.c_hat * (1.0 / (obs.t - s1) + self.varrho.powi(-2)) * self.sup_w4;
        MonitorReport::check(id, obs.t, value, bound, 0.0)
            .with_note(format!("scaled {}", value * (obs.t - s1)))
    }
}

/// Gaussian density ratio at `(t + τ, x₀)`; informational.
pub struct DensityMonitor {
    x0: Vec<f64>,
    tau: f64,
    d0: f64,
}

impl DensityMonitor {
    pub fn new(x0: Vec<f64>, tau: f64, d0: f64) -> Self {
        Self { x0, tau, d0 }
    }
}

impl Monitor for DensityMonitor {
    fn id(&self) -> &str {
        "density"
    }

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport {
        let kp = KernelPoint {
            t0: obs.t + self.tau,
            x0: self.x0.clone(),
        };
        match gaussian_density_ratio(obs.sample, &kp, obs.t, self.d0) {
            Ok(d) => {
                let note = if d.truncated {
                    format!("sample radius {} below 6 sqrt(tau); truncation not controlled", d.sample_radius)
                } else {
                    format!("sample radius {}", d.sample_radius)
                };
                MonitorReport::check("density", obs.t, d.ratio, 1.0 + self.d0, 0.0)
                    .informational()
                    .with_note(note)
            }
            Err(e) => MonitorReport::skipped("density", obs.t, e.to_string()).informational(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Curve, GraphPatch, PatchDomain};

    fn obs<'a>(t: f64, s: &'a Surface, sample: &'a SurfaceSample) -> Observation<'a> {
        Observation {
            step: 0,
            t,
            surface: s,
            sample,
        }
    }

    fn plane() -> Surface {
        Surface::Graph(GraphPatch::from_fn(vec![0.0], 2.0, 0.01, PatchDomain::Ball, |_| 0.0).unwrap())
    }

    #[test]
    fn plane_phi_decreases() {
        let s = plane();
        let sample = s.sample();
        let mut m = MonotoneIntegral::phi(1.0, 1, 0.0, vec![0.0, 0.0]);
        let r0 = m.observe(&obs(0.0, &s, &sample));
        assert!(r0.pass && r0.value == 0.0);
        let r1 = m.observe(&obs(0.01, &s, &sample));
        assert!(r1.pass && r1.value < 0.0);
    }

    #[test]
    fn support_outside_is_skipped() {
        let s = plane();
        let sample = s.sample();
        let mut m = MonotoneIntegral::phi(1.0, 1, 0.0, vec![1.5, 0.0]);
        assert!(m.observe(&obs(0.0, &s, &sample)).skipped.is_some());
    }

    #[test]
    fn plane_measure_and_gradient() {
        let s = plane();
        let sample = s.sample();
        let mut m = MeasureMonitor::new(vec![0.0, 0.0], 1.0);
        let r = m.observe(&obs(0.0, &s, &sample));
        assert!((r.value - 1.0).abs() < 1e-9 && (r.bound - 16.0).abs() < 1e-9);
        let mut g = GradientEhMonitor::new(vec![0.0, 0.0], 1.0);
        let r = g.observe(&obs(0.0, &s, &sample));
        assert!(r.pass);
        assert!(r.margin.abs() < 1e-12);
    }

    #[test]
    fn slope_one_gradient() {
        let s = Surface::Graph(GraphPatch::from_fn(vec![0.0], 2.0, 0.01, PatchDomain::Ball, |x| x[0]).unwrap());
        let sample = s.sample();
        let mut g = GradientEhMonitor::new(vec![0.0, 0.0], 1.0);
        let r = g.observe(&obs(0.0, &s, &sample));
        assert!((r.bound - 2f64.sqrt()).abs() < 1e-9);
        assert!(r.value <= 2f64.sqrt() + 1e-9);
    }

    #[test]
    fn height_precondition() {
        let s = Surface::Graph(
            GraphPatch::from_fn(vec![0.0], 2.0, 0.01, PatchDomain::Ball, |x| 0.1 * x[0].sin()).unwrap(),
        );
        let sample = s.sample();
        assert!(HeightMonitor::new(&sample, 0.0, vec![0.0, 0.0], 1.0, Some(0.01), 1.0).is_err());
        let mut h = HeightMonitor::new(&sample, 0.0, vec![0.0, 0.0], 1.0, Some(0.1), 1.0).unwrap();
        assert!(h.observe(&obs(0.0, &s, &sample)).pass);
    }

    #[test]
    fn measure_of_circle_arc() {
        let s = Surface::Curve(Curve::regular_polygon([0.0, 0.0], 1.0, 2048, 0.0).unwrap());
        let sample = s.sample();
        let got = measure_in_ball(&s, &sample, &[0.0, -1.0], 0.5);
        assert!((got - 4.0 * 0.25f64.asin()).abs() < 1e-4);
        assert_eq!(measure_in_ball(&s, &sample, &[5.0, 5.0], 0.5), 0.0);
    }

    #[test]
    fn two_sheets_flagged() {
        // two flat lines y = 0 and y = 0.01 joined far away
        let mut v: Vec<[f64; 2]> = (0..=400).map(|i| [-4.0 + 0.02 * i as f64, 0.0]).collect();
        v.extend((0..=400).rev().map(|i| [-4.0 + 0.02 * i as f64, 0.01]));
        let s = Surface::Curve(Curve::new_unchecked_simplicity(v, true).unwrap());
        let sample = s.sample();
        let mut d = DensityMonitor::new(vec![0.0, 0.0], 0.01, 0.1);
        let r = d.observe(&obs(0.0, &s, &sample));
        assert!(!r.enforced && !r.pass && (r.value - 2.0).abs() < 0.01, "{}", r.value);
    }
}
