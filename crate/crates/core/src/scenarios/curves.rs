//! Scenarios evolved by curve shortening flow.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flow::{FlowTrace, RemeshPolicy};
use crate::geometry::{Curve, Cylinder, Surface};
use crate::graphicality::{first_graphical_time, first_nongraphical_time, is_graphical};
use crate::monitors::TestField;
use crate::{Error, Result};

use super::initial::{rounded_square, Fold};
use super::monitors::Anchor;
use super::spec::{ScenarioParams, ScenarioSpec, Verdict};
use super::{evolve, flow_config, single, ScenarioOutcome};

fn anchor(x0: [f64; 2], rho: f64, brakke: bool) -> Anchor {
    Anchor {
        x0: x0.to_vec(),
        rho,
        field: TestField::Constant { value: 1.0 },
        brakke,
    }
}

fn mean_radius(c: &Curve, center: [f64; 2]) -> f64 {
    let v = c.vertices();
    v.iter().map(|p| (p[0] - center[0]).hypot(p[1] - center[1])).sum::<f64>() / v.len() as f64
}

pub(super) fn circle(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::Circle { radius } = spec.params else {
        unreachable!()
    };
    let r2 = radius * radius;
    let c = Curve::regular_polygon([0.0, 0.0], radius, spec.resolution, 0.0)?;
    let a = anchor([0.0, -radius], 0.5 * radius, true);
    let cfg = flow_config(spec, 0.6 * r2, Some(0.01 * r2), 500, RemeshPolicy::default());
    let trace = evolve(spec, Surface::Curve(c), &a, &cfg)?;
    let mut v = Verdict::new("circle");
    let mut radius_err = 0.0f64;
    for r in trace.records.iter().filter(|r| r.t <= 0.45 * r2 * (1.0 + 1e-12)) {
        let exact = (r2 - 2.0 * r.t).sqrt();
        let got = mean_radius(r.surface.as_curve().expect("curve flow"), [0.0, 0.0]);
        radius_err = radius_err.max((got - exact).abs() / exact);
    }
    let mut rate_err = 0.0f64;
    for w in trace.records.windows(2).filter(|w| w[1].t <= 0.45 * r2 * (1.0 + 1e-12)) {
        if let (Some(a0), Some(a1)) = (w[0].stats.area, w[1].stats.area) {
            let rate = (a1 - a0) / (w[1].t - w[0].t);
            rate_err = rate_err.max((rate + TAU).abs() / TAU);
        }
    }
    v.measure("radius_rel_error", radius_err);
    v.measure("area_rate_rel_error", rate_err);
    v.assert(radius_err <= 2e-3, || format!("radius error {radius_err} above 0.2%"));
    v.assert(rate_err <= 0.02, || format!("area rate error {rate_err} above 2%"));
    match trace.extinction_time() {
        Some(t) => {
            let want = 0.5 * r2;
            v.measure("extinction_time", t);
            v.assert((t - want).abs() <= 0.01 * want, || format!("extinction at {t}, expected {want}"));
        }
        None => v.assert(false, || "no extinction".into()),
    }
    Ok(single(v, "circle", trace))
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let s = if l2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - s * dx).hypot(p[1] - a[1] - s * dy)
}

/// Distance from `p` to the polyline and the largest vertex distance.
fn distance_range(c: &Curve, p: [f64; 2]) -> (f64, f64) {
    let near = c.edges().map(|(a, b)| seg_dist(p, a, b)).fold(f64::INFINITY, f64::min);
    let far = c
        .vertices()
        .iter()
        .map(|q| (q[0] - p[0]).hypot(q[1] - p[1]))
        .fold(0.0, f64::max);
    (near, far)
}

/// Envelope data of the square run around `(0, 1)` at time `t`:
/// `[t, r(t), R(t), min distance, max vertex distance]` with `r = √(1−2t)`
/// and `R` the stated outer radius `√(3+3ε−2t)`.
pub fn square_envelope(t: f64, c: &Curve, epsilon: f64) -> [f64; 5] {
    let (near, far) = distance_range(c, [0.0, 1.0]);
    [t, (1.0 - 2.0 * t).sqrt(), (3.0 + 3.0 * epsilon - 2.0 * t).sqrt(), near, far]
}

/// [`square_envelope`] at every record before the inner circle vanishes.
fn square_envelopes(trace: &FlowTrace, epsilon: f64) -> Vec<[f64; 5]> {
    trace
        .records
        .iter()
        .filter(|r| r.t < 0.5)
        .filter_map(|r| Some(square_envelope(r.t, r.surface.as_curve()?, epsilon)))
        .collect()
}

/// Absolute slack of the envelope comparisons.
const ENVELOPE_TOL: f64 = 1e-6;

pub(super) fn shrinking_square(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::ShrinkingSquare { epsilon } = spec.params else {
        unreachable!()
    };
    let interval = 0.01;
    let c = rounded_square(epsilon, spec.resolution)?;
    let a = anchor([0.0, 0.0], 1.0, false);
    let cfg = flow_config(spec, 2.5, Some(interval), u64::MAX, RemeshPolicy::default());
    let trace = evolve(spec, Surface::Curve(c), &a, &cfg)?;
    let mut v = Verdict::new("shrinking_square");

    let env = square_envelopes(&trace, epsilon);
    let r_outer0 = env.first().map_or(0.0, |e| e[4]);
    let mut inner = f64::INFINITY;
    let mut outer = f64::INFINITY;
    let mut stated = f64::INFINITY;
    for &[t, r, big_r, near, far] in &env {
        inner = inner.min(near - r);
        outer = outer.min((r_outer0 * r_outer0 - 2.0 * t).sqrt() - far);
        stated = stated.min(big_r - far);
    }
    v.measure("inner_margin", inner);
    v.measure("outer_margin", outer);
    v.measure("outer_radius_initial", r_outer0);
    v.measure("stated_outer_margin", stated);
    v.assert(inner >= -ENVELOPE_TOL, || format!("inner comparison circle crossed, margin {inner}"));
    v.assert(outer >= -ENVELOPE_TOL, || format!("outer comparison circle crossed, margin {outer}"));

    let big = Cylinder::centered(1, 2.0, 2.0)?;
    let small = Cylinder::centered(1, 1.0, 1.0)?;
    let t2 = first_nongraphical_time(&trace, &big, None)?;
    let t1 = first_nongraphical_time(&trace, &small, None)?;
    match t2 {
        Some(t) => {
            v.measure("nongraphical_time_c2", t);
            v.assert(t > 0.0, || "not graphical in C(0,2,2) initially".into());
            v.assert(t <= 2.0 * epsilon + interval + 1e-12, || {
                format!("still graphical in C(0,2,2) at t = {t} > 2 epsilon + stride")
            });
        }
        None => v.assert(false, || "graphical in C(0,2,2) throughout".into()),
    }
    match t1 {
        Some(t) => {
            v.measure("nongraphical_time_c1", t);
            v.assert(t2.is_none_or(|t2| t >= t2), || "C(0,1,1) failure precedes C(0,2,2) failure".into());
        }
        None => v.assert(false, || "graphical in C(0,1,1) throughout".into()),
    }
    match trace.extinction_time() {
        Some(t) => {
            v.measure("extinction_time", t);
            v.assert((0.5..=2.0).contains(&t), || format!("extinction at {t} outside [0.5, 2]"));
        }
        None => v.assert(false, || "no extinction".into()),
    }
    let ratio = trace
        .records
        .iter()
        .rev()
        .filter_map(|r| r.surface.as_curve())
        .find(|c| c.area() > 0.0)
        .map_or(f64::INFINITY, |c| c.isoperimetric_ratio());
    v.measure("final_isoperimetric_ratio", ratio);
    v.assert(ratio < 1.05, || format!("isoperimetric ratio {ratio} near extinction"));
    Ok(single(v, "square", trace))
}

/// Largest `value/scale` over pairs with a positive scale.
fn required(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs
        .filter(|&(_, s)| s > 0.0)
        .map(|(x, s)| x / s)
        .fold(0.0, f64::max)
}

pub(super) fn become_graphical(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::BecomeGraphical { lipschitz, gamma, epsilon, gap_width, hold, c_hat } = spec.params else {
        unreachable!()
    };
    let rho = 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let fold = Fold::new(&mut rng, lipschitz, gamma, gap_width)?;
    // budgets λρ for the fold measure and 2λρ for the gap width, γ = λ²ρ
    let budget = (gamma * rho).sqrt();
    if fold.fold_measure() > budget {
        return Err(Error::config(
            "params.gap_width",
            format!("fold measure {} exceeds the budget {budget}", fold.fold_measure()),
        ));
    }
    if gap_width > 2.0 * budget {
        return Err(Error::config("params.gap_width", format!("gap wider than {}", 2.0 * budget)));
    }
    let h = 4.0 / spec.resolution as f64;
    let curve = fold.curve(h)?;
    let interval = epsilon / 200.0;
    let remesh = RemeshPolicy::Adaptive {
        theta: 0.1,
        min_edge: (fold.s / 16.0).min(h),
        max_edge: h,
    };
    let a = anchor([0.0, 0.0], rho, false);
    let cfg = flow_config(spec, 2.0 * epsilon, Some(interval), 250, remesh);
    let trace = evolve(spec, Surface::Curve(curve), &a, &cfg)?;
    let mut v = Verdict::new("become_graphical");
    v.measure("fold_measure", fold.fold_measure());
    v.measure("measure_budget", budget);
    let cyl = Cylinder::centered(1, rho, rho)?;
    let tg = first_graphical_time(&trace, &cyl, hold, None)?;
    match tg {
        Some(t) => {
            v.measure("first_graphical_time", t);
            v.assert(t <= epsilon, || format!("first graphical at {t} > epsilon = {epsilon}"));
        }
        None => v.assert(false, || "never graphical in C(0,1,1)".into()),
    }
    // the decay bounds are claimed on [ε, 2ε]
    let mut ex = Vec::new();
    let mut lost = 0usize;
    for r in trace.records.iter().filter(|r| r.t >= epsilon * (1.0 - 1e-12)) {
        match is_graphical(&r.surface, &cyl, None)?.extraction {
            Some(e) => ex.push((r.t, e)),
            None => lost += 1,
        }
    }
    v.assert(lost == 0, || format!("not graphical in C(0,1,1) at {lost} records in [epsilon, 2 epsilon]"));
    let c_offset = required(ex.iter().map(|(t, e)| (e.sup_offset * rho, *t)));
    let c_grad = required(ex.iter().map(|(t, e)| (e.sup_grad, (t / (rho * rho)).powf(0.25))));
    let c_hess = required(ex.iter().map(|(t, e)| (e.sup_hess, 1.0 / t.sqrt())));
    v.measure("c_offset", c_offset);
    v.measure("c_grad", c_grad);
    v.measure("c_hess", c_hess);
    for (name, c) in [("offset", c_offset), ("gradient", c_grad), ("hessian", c_hess)] {
        v.assert(c <= c_hat, || format!("{name} bound needs C = {c} > {c_hat}"));
    }
    Ok(single(v, "fold", trace))
}
