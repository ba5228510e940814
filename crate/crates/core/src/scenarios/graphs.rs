//! Scenarios whose surfaces are graphs over `B^n(0, 2)`.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::flow::{EndReason, RemeshPolicy};
use crate::geometry::{Cylinder, GraphPatch, Surface};
use crate::graphicality::{is_graphical, Extraction};
use crate::monitors::TestField;
use crate::{Error, Result};

use super::initial::{ball_nodes, ball_patch, steep_ramp, FourierSum};
use super::monitors::Anchor;
use super::spec::{ScenarioParams, ScenarioSpec, Verdict};
use super::{audit, evolve, finish_margins, flow_config, single, MemberRun, ScenarioOutcome};

/// Number of records per window.
const RECORDS: f64 = 50.0;

fn anchor(p: &GraphPatch, brakke: bool) -> Anchor {
    let n = p.dim();
    let origin = vec![0.0; n];
    let mut x0 = origin;
    x0.push(p.interpolate(&vec![0.0; n]).unwrap_or(0.0));
    Anchor {
        field: TestField::Bump {
            center: x0.clone(),
            radius: 0.5,
        },
        x0,
        rho: 1.0,
        brakke,
    }
}

fn unit_cylinder(n: usize) -> Cylinder {
    Cylinder::centered(n, 1.0, 1.0).expect("unit cylinder")
}

/// Extraction in `cyl` at every record; `None` where not graphical.
fn extractions(member: &MemberRun, cyl: &Cylinder) -> Result<Vec<(f64, Option<Extraction>)>> {
    member
        .trace
        .records
        .iter()
        .map(|r| Ok((r.t, is_graphical(&r.surface, cyl, None)?.extraction)))
        .collect()
}

pub(super) fn plane(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::Plane { dimension, slope, window } = spec.params else {
        unreachable!()
    };
    let p = ball_patch(dimension, spec.resolution, |x| slope * x[0])?;
    let a = anchor(&p, true);
    let cfg = flow_config(spec, window, Some(window / RECORDS), u64::MAX, RemeshPolicy::default());
    let initial = p.values().to_vec();
    let trace = evolve(spec, Surface::Graph(p.clone()), &a, &cfg)?;
    let mut v = Verdict::new("plane");
    let cyl = Cylinder::new(a.x0.clone(), 1.0, 1.0 + slope.abs())?;
    let mut drift = 0.0f64;
    let mut graphical = 0usize;
    for r in &trace.records {
        let g = r.surface.as_graph().expect("graph flow");
        for i in g.active_nodes() {
            drift = drift.max((g.values()[i] - initial[i]).abs());
        }
        if is_graphical(&r.surface, &cyl, None)?.graphical {
            graphical += 1;
        }
    }
    v.measure("max_displacement", drift);
    v.measure("graphical_records", graphical as f64);
    v.assert(drift <= 1e-9, || format!("plane moved by {drift}"));
    v.assert(graphical == trace.records.len(), || {
        format!("not graphical in C(x0, 1, 1 + |slope|) at {} records", trace.records.len() - graphical)
    });
    Ok(single(v, "plane", trace))
}

/// Per-member findings of the stay-graphical family.
struct StayMember {
    kappa: f64,
    censored: bool,
    grad_ratio: f64,
    lambda: f64,
}

/// Largest `r ≤ 2` on a 0.05 grid with `M_t` graphical in `C(0, r, 1)`.
fn graphical_radius(surface: &Surface, n: usize) -> Result<f64> {
    for k in 0..40 {
        let r = 2.0 - 0.05 * k as f64;
        let cyl = Cylinder::centered(n, r, 1.0)?;
        if is_graphical(surface, &cyl, None)?.graphical {
            return Ok(r);
        }
    }
    Ok(0.0)
}

fn stay_member(m: &MemberRun, n: usize, lip: f64, window: f64, v: &mut Verdict) -> Result<StayMember> {
    let cyl = unit_cylinder(n);
    let mut kappa = None;
    let mut grad_ratio = 0.0f64;
    let mut lambda = 0.0f64;
    for (t, ex) in extractions(m, &cyl)? {
        match ex {
            Some(e) => {
                let ratio = if lip > 0.0 { e.sup_grad / lip } else { 0.0 };
                grad_ratio = grad_ratio.max(ratio);
                v.assert(e.sup_grad <= 4.0 * lip + 1e-9, || {
                    format!("{}: sup|Dg| = {} exceeds 4L at t = {t}", m.label, e.sup_grad)
                });
            }
            None if kappa.is_none() => kappa = Some(t),
            None => {}
        }
    }
    for r in m.trace.records.iter().filter(|r| r.t > 0.0) {
        let rs = graphical_radius(&r.surface, n)?;
        lambda = lambda.max((2.0 - rs) / r.t.sqrt());
    }
    if m.trace.end == EndReason::BlowUp {
        let t = m.trace.final_record().t;
        kappa = Some(kappa.map_or(t, |k| k.min(t)));
    }
    Ok(StayMember {
        censored: kappa.is_none(),
        kappa: kappa.unwrap_or(window),
        grad_ratio,
        lambda,
    })
}

pub(super) fn stay_graphical(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::StayGraphical { lipschitz, dimension, family_size, window } = spec.params else {
        unreachable!()
    };
    let nodes = ball_nodes(dimension, spec.resolution)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let cfg = flow_config(spec, window, Some(window / RECORDS), u64::MAX, RemeshPolicy::default());
    let mut v = Verdict::new("stay_graphical");
    let mut margins = BTreeMap::new();
    let mut members = Vec::with_capacity(family_size);
    let mut found = Vec::with_capacity(family_size);
    for i in 0..family_size {
        let mut f = FourierSum::random(&mut rng, dimension);
        f.fit(&nodes, lipschitz, 0.5)?;
        let p = ball_patch(dimension, spec.resolution, |x| f.eval(x))?;
        let a = anchor(&p, false);
        let trace = evolve(spec, Surface::Graph(p), &a, &cfg)?;
        let m = MemberRun {
            label: format!("member_{i:02}"),
            trace,
        };
        audit(&mut v, &m.label, &m.trace, &mut margins);
        found.push(stay_member(&m, dimension, lipschitz, window, &mut v)?);
        members.push(m);
    }
    let primary = (0..found.len())
        .min_by(|&a, &b| found[a].kappa.total_cmp(&found[b].kappa))
        .unwrap_or(0);
    let kappa = found[primary].kappa;
    v.measure("kappa_hat", kappa);
    v.measure("censored", f64::from(u8::from(found.iter().all(|m| m.censored))));
    v.measure("lambda_hat", found.iter().map(|m| m.lambda).fold(0.0, f64::max));
    v.measure("max_grad_over_l", found.iter().map(|m| m.grad_ratio).fold(0.0, f64::max));
    v.measure("members", family_size as f64);
    v.assert(kappa > 0.0, || "kappa_hat is zero".into());
    finish_margins(&mut v, margins);
    Ok(ScenarioOutcome { verdict: v, members, primary })
}

/// Largest ratio `value/scale` over records with a positive scale.
fn required(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    pairs
        .filter(|&(_, s)| s > 0.0)
        .map(|(x, s)| x / s)
        .fold(0.0, f64::max)
}

pub(super) fn flat_stay_graphical(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::FlatStayGraphical { l, dimension, c_hat, window } = spec.params else {
        unreachable!()
    };
    let rho = 1.0;
    let p = ball_patch(dimension, spec.resolution, |x| 0.5 * l * (2.0 * x[0]).sin())?;
    let a = anchor(&p, false);
    let cfg = flow_config(spec, window, Some(window / RECORDS), u64::MAX, RemeshPolicy::default());
    let trace = evolve(spec, Surface::Graph(p), &a, &cfg)?;
    let m = MemberRun {
        label: "flat".into(),
        trace,
    };
    let mut v = Verdict::new("flat_stay_graphical");
    let cyl = Cylinder::new(a.x0.clone(), rho, rho)?;
    let ex = extractions(&m, &cyl)?;
    let lost = ex.iter().filter(|(_, e)| e.is_none()).count();
    v.assert(lost == 0, || format!("not graphical in C(x0, rho, rho) at {lost} records"));
    let ex: Vec<(f64, Extraction)> = ex.into_iter().filter_map(|(t, e)| e.map(|e| (t, e))).collect();
    let c_offset = required(ex.iter().map(|(t, e)| ((e.sup_offset - 2.0 * l * rho).max(0.0) * rho, *t)));
    let c_grad = ex
        .iter()
        .map(|(t, e)| {
            let s = (l + t / (rho * rho)).powf(0.25);
            if s > 0.0 { e.sup_grad / s } else if e.sup_grad > 0.0 { f64::INFINITY } else { 0.0 }
        })
        .fold(0.0, f64::max);
    let c_hess = required(ex.iter().map(|(t, e)| (e.sup_hess, 1.0 / t.sqrt())));
    let early = required(ex.iter().filter(|(t, _)| *t > 0.0).take(10).map(|(t, e)| (e.sup_hess, 1.0 / t.sqrt())));
    v.measure("c_offset", c_offset);
    v.measure("c_grad", c_grad);
    v.measure("c_hess", c_hess);
    v.measure("hess_sqrt_t_first10", early);
    for (name, c) in [("offset", c_offset), ("gradient", c_grad), ("hessian", c_hess)] {
        v.assert(c <= c_hat, || format!("{name} bound needs C = {c} > {c_hat}"));
    }
    Ok(single(v, "flat", m.trace))
}

pub(super) fn bounded_curvature(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    let ScenarioParams::BoundedCurvature { k, kappa_tilt, lipschitz, window, c_hat } = spec.params else {
        unreachable!()
    };
    let rho = 1.0;
    let tilt0 = lipschitz * lipschitz / (1.0 + lipschitz * lipschitz);
    if tilt0 > 1.0 - 2.0 * kappa_tilt + 1e-12 {
        return Err(Error::config(
            "params.kappa_tilt",
            format!("initial tilt {tilt0} exceeds 1 - 2 kappa_tilt"),
        ));
    }
    let (steep, f) = steep_ramp(lipschitz, k / rho);
    if steep == 0.0 {
        return Err(Error::config("params.k", "no ramp meets the curvature bound"));
    }
    let p = ball_patch(1, spec.resolution, f)?;
    let a = anchor(&p, false);
    let cfg = flow_config(spec, window, Some(window / RECORDS), u64::MAX, RemeshPolicy::default());
    let trace = evolve(spec, Surface::Graph(p), &a, &cfg)?;
    let m = MemberRun {
        label: "ramp".into(),
        trace,
    };
    let mut v = Verdict::new("bounded_curvature");
    let cyl = Cylinder::new(a.x0.clone(), rho, rho)?;
    let mut sigma = None;
    let mut max_tilt = 0.0f64;
    let mut a_sqrt_t = 0.0f64;
    for r in &m.trace.records {
        let rep = is_graphical(&r.surface, &cyl, None)?;
        let Some(e) = rep.extraction else {
            sigma.get_or_insert(r.t / (rho * rho));
            continue;
        };
        if sigma.is_some() {
            continue;
        }
        max_tilt = max_tilt.max(e.sup_grad * e.sup_grad / (1.0 + e.sup_grad * e.sup_grad));
        let s = r.surface.sample();
        let amax = s
            .points
            .iter()
            .zip(&s.curvature)
            .filter(|(q, _)| cyl.contains(q))
            .map(|(_, c)| *c)
            .fold(0.0, f64::max);
        a_sqrt_t = a_sqrt_t.max(amax * r.t.sqrt());
    }
    let sigma = sigma.unwrap_or(window / (rho * rho));
    v.measure("sigma_hat", sigma);
    v.measure("max_tilt", max_tilt);
    v.measure("a_sqrt_t", a_sqrt_t);
    v.measure("ramp_steepness", steep);
    v.assert(sigma > 0.0, || "not graphical at the initial record".into());
    v.assert(max_tilt <= 1.0 - kappa_tilt, || format!("tilt {max_tilt} exceeds 1 - kappa_tilt"));
    v.assert(a_sqrt_t <= c_hat, || format!("max|A| sqrt(t) = {a_sqrt_t} exceeds {c_hat}"));
    Ok(single(v, "ramp", m.trace))
}
