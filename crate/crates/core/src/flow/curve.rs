//! Curve shortening flow for polylines, with remeshing.

use serde::{Deserialize, Serialize};

use crate::geometry::Curve;
use crate::{Error, Result};

use super::graph::MAX_CFL;

/// Edges shorter than this count as collapsed.
pub const COLLAPSE_EDGE: f64 = 1e-9;

/// When and how vertices are redistributed along a curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RemeshPolicy {
    /// Only collapsed edges trigger a (uniform) redistribution.
    None,
    /// Uniform arclength redistribution, same vertex count, once the ratio
    /// of longest to shortest edge exceeds `max_ratio`.
    Uniform { max_ratio: f64 },
    /// Curvature-graded spacing `clamp(θ/|κ|, min_edge, max_edge)`; the
    /// vertex count follows the curvature.
    Adaptive {
        theta: f64,
        min_edge: f64,
        max_edge: f64,
    },
}

impl Default for RemeshPolicy {
    fn default() -> Self {
        RemeshPolicy::Uniform { max_ratio: 4.0 }
    }
}

impl RemeshPolicy {
    pub fn validate(&self, field: &str) -> Result<()> {
        match *self {
            RemeshPolicy::None => Ok(()),
            RemeshPolicy::Uniform { max_ratio } if max_ratio > 1.0 && max_ratio.is_finite() => {
                Ok(())
            }
            RemeshPolicy::Uniform { .. } => {
                Err(Error::config(format!("{field}.max_ratio"), "must be finite and > 1"))
            }
            RemeshPolicy::Adaptive {
                theta,
                min_edge,
                max_edge,
            } => {
                if !(theta > 0.0 && theta.is_finite()) {
                    return Err(Error::config(format!("{field}.theta"), "must be > 0"));
                }
                if !(min_edge > COLLAPSE_EDGE && max_edge >= min_edge && max_edge.is_finite()) {
                    return Err(Error::config(
                        format!("{field}.min_edge"),
                        "need 1e-9 < min_edge <= max_edge",
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Upper bound on vertices created by adaptive remeshing.
const MAX_VERTICES: usize = 20_000;

/// Vertex velocities `κν`; endpoints of open curves stay fixed.
fn velocities(c: &Curve) -> Result<Vec<[f64; 2]>> {
    let m = c.len();
    (0..m)
        .map(|i| {
            if !c.is_closed() && (i == 0 || i == m - 1) {
                return Ok([0.0, 0.0]);
            }
            let f = c.curve_quantities(i)?;
            Ok([f.curvature * f.normal[0], f.curvature * f.normal[1]])
        })
        .collect()
}

pub(crate) fn cfl_limit(c: &Curve, lambda: f64) -> f64 {
    let e = c.min_edge();
    lambda * e * e
}

/// One explicit Euler step of curve shortening flow, `x_i += dt·κ_i ν_i`.
/// A `dt` above `0.25·(min edge)²` is rejected with [`Error::Cfl`].
pub fn step_csf(c: &Curve, dt: f64) -> Result<Curve> {
    let limit = cfl_limit(c, MAX_CFL);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::Cfl { dt, limit });
    }
    advance(c, dt)
}

pub(crate) fn advance(c: &Curve, dt: f64) -> Result<Curve> {
    let v = velocities(c)?;
    let mut next = c.clone();
    let t = c.time() + dt;
    for (p, vi) in next.vertices_mut().iter_mut().zip(&v) {
        p[0] += dt * vi[0];
        p[1] += dt * vi[1];
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(Error::BlowUp { t });
        }
    }
    next.set_time(t);
    Ok(next)
}

/// Why a remesh happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RemeshCause {
    Collapse,
    Spacing,
}

/// Applies the policy; returns the new curve when a remesh was triggered.
pub fn maybe_remesh(c: &Curve, policy: &RemeshPolicy) -> Result<Option<(Curve, RemeshCause)>> {
    let collapsed = c.min_edge() < COLLAPSE_EDGE;
    match *policy {
        RemeshPolicy::None | RemeshPolicy::Uniform { .. } => {
            let ratio_hit = matches!(*policy, RemeshPolicy::Uniform { max_ratio }
                if c.max_edge() > max_ratio * c.min_edge());
            if collapsed || ratio_hit {
                let cause = if collapsed { RemeshCause::Collapse } else { RemeshCause::Spacing };
                return Ok(Some((remesh_uniform(c)?, cause)));
            }
            Ok(None)
        }
        RemeshPolicy::Adaptive {
            theta,
            min_edge,
            max_edge,
        } => {
            let targets = edge_targets(c, theta, min_edge, max_edge)?;
            let off = (0..c.edge_count()).any(|i| {
                let l = c.edge_length(i);
                l > 2.0 * targets[i] || l < targets[i] / 3.0
            });
            if collapsed || off {
                let cause = if collapsed { RemeshCause::Collapse } else { RemeshCause::Spacing };
                return Ok(Some((resample(c, &targets)?, cause)));
            }
            Ok(None)
        }
    }
}

/// Same vertex count, equal arclength spacing; endpoints of open curves and
/// vertex 0 of closed curves are kept.
pub fn remesh_uniform(c: &Curve) -> Result<Curve> {
    let targets = vec![1.0; c.edge_count()];
    let segments = if c.is_closed() { c.len() } else { c.len() - 1 };
    resample_count(c, &targets, segments)
}

/// Target edge length per edge from the curvature of nearby vertices.
fn edge_targets(c: &Curve, theta: f64, min_edge: f64, max_edge: f64) -> Result<Vec<f64>> {
    let m = c.len();
    let kappa: Vec<f64> = (0..m)
        .map(|i| c.curve_quantities(i).map(|f| f.curvature.abs()))
        .collect::<Result<_>>()?;
    let e = c.edge_count();
    let wrap = |i: isize| -> Option<usize> {
        if c.is_closed() {
            Some(i.rem_euclid(m as isize) as usize)
        } else if i >= 0 && (i as usize) < m {
            Some(i as usize)
        } else {
            None
        }
    };
    Ok((0..e)
        .map(|i| {
            let k = (-2..=3)
                .filter_map(|d| wrap(i as isize + d))
                .map(|j| kappa[j])
                .fold(0.0, f64::max);
            if k > 0.0 {
                (theta / k).clamp(min_edge, max_edge)
            } else {
                max_edge
            }
        })
        .collect())
}

fn resample(c: &Curve, targets: &[f64]) -> Result<Curve> {
    let u: f64 = (0..c.edge_count()).map(|i| c.edge_length(i) / targets[i]).sum();
    let segments = (u.ceil() as usize).clamp(8, MAX_VERTICES);
    resample_count(c, targets, segments)
}

/// Places `segments` edges equally spaced in the measure `ds / target`.
fn resample_count(c: &Curve, targets: &[f64], segments: usize) -> Result<Curve> {
    let e = c.edge_count();
    let mut cum = Vec::with_capacity(e + 1);
    cum.push(0.0);
    for i in 0..e {
        cum.push(cum[i] + c.edge_length(i) / targets[i]);
    }
    let total = cum[e];
    let count = if c.is_closed() { segments } else { segments + 1 };
    let mut out = Vec::with_capacity(count);
    let mut edge = 0;
    for k in 0..count {
        if !c.is_closed() && k == segments {
            out.push(*c.vertices().last().expect("nonempty"));
            break;
        }
        let u = total * k as f64 / segments as f64;
        while edge + 1 < e && cum[edge + 1] <= u {
            edge += 1;
        }
        let (a, b) = c.edge(edge);
        let span = cum[edge + 1] - cum[edge];
        let s = if span > 0.0 { ((u - cum[edge]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
    }
    Ok(Curve::new_unchecked_simplicity(out, c.is_closed())?.with_time(c.time()))
}
