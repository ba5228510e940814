//! The monitor battery attached to each scenario run.

use crate::geometry::Surface;
use crate::monitors::{
    BrakkeMonitor, CurvatureEhMonitor, DensityMonitor, EtaForm, GradientEhMonitor, HeightMonitor,
    MeasureMonitor, Monitor, MonotoneIntegral, TestField, Upsilon,
};
use crate::Result;

use super::spec::ScenarioSpec;

/// Monitors on by default; `brakke` is added per scenario.
pub const DEFAULT_MONITORS: [&str; 9] = [
    "phi", "ups_const", "ups_slab", "ups_split", "measure", "height", "grad_eh", "curv_eh",
    "density",
];

/// Where the local checks are centred and at what scale.
#[derive(Clone, Debug, PartialEq)]
pub struct Anchor {
    /// A point on the initial surface.
    pub x0: Vec<f64>,
    pub rho: f64,
    /// Test field for the integrated identity.
    pub field: TestField,
    pub brakke: bool,
}

/// Builds the enabled monitors for `initial`, in the order of
/// [`crate::scenarios::MONITOR_IDS`].
pub fn build(spec: &ScenarioSpec, initial: &Surface, anchor: &Anchor) -> Result<Vec<Box<dyn Monitor>>> {
    let mut defaults: Vec<&str> = DEFAULT_MONITORS.to_vec();
    if anchor.brakke {
        defaults.push("brakke");
    }
    let on = |id: &str| spec.monitor_enabled(id, &defaults);
    let m = &spec.monitors;
    let n = initial.dim();
    let (x0, rho) = (anchor.x0.clone(), anchor.rho);
    let t0 = initial.time();
    let sample = initial.sample();
    let mut out: Vec<Box<dyn Monitor>> = Vec::new();
    if on("phi") {
        out.push(Box::new(MonotoneIntegral::phi(rho, n, t0, x0.clone()).with_tolerance(m.tol_mono)));
    }
    let k = x0.len() - 1;
    let deviation = sample
        .points
        .iter()
        .filter(|p| crate::geometry::dist_sq(p, &x0) < rho * rho)
        .map(|p| (p[k] - x0[k]).abs())
        .fold(0.0, f64::max);
    let forms = [
        ("ups_const", EtaForm::Constant),
        ("ups_slab", EtaForm::Slab { r0: 0.5 * deviation }),
        (
            "ups_split",
            EtaForm::Split {
                width: 0.5 * rho,
                center: [x0[k - 1], x0[k]],
            },
        ),
    ];
    for (id, form) in forms {
        if on(id) {
            let u = Upsilon {
                form,
                varrho: rho,
                y0: x0.clone(),
                t1: t0,
                n,
            };
            out.push(Box::new(MonotoneIntegral::upsilon(u).with_tolerance(m.tol_mono)));
        }
    }
    if on("measure") {
        out.push(Box::new(MeasureMonitor::new(x0.clone(), rho)));
    }
    if on("height") {
        out.push(Box::new(HeightMonitor::new(&sample, t0, x0.clone(), 0.5 * rho, None, m.c_height)?));
    }
    if on("grad_eh") {
        out.push(Box::new(GradientEhMonitor::new(x0.clone(), rho)));
    }
    if on("curv_eh") {
        out.push(Box::new(CurvatureEhMonitor::new(x0.clone(), 0.5 * rho, rho, m.c_curvature)));
    }
    if on("density") {
        out.push(Box::new(DensityMonitor::new(x0.clone(), m.density_tau, m.d0)));
    }
    if on("brakke") {
        out.push(Box::new(BrakkeMonitor::new(anchor.field.clone()).with_tolerance(m.tol_identity)));
    }
    Ok(out)
}
