//! Vertical-probe graphicality: is `M ∩ C(a, r, h)` the graph of a function
//! over `B^n(â, r)`?

use serde::Serialize;

use crate::flow::FlowTrace;
use crate::geometry::{Curve, Cylinder, GraphPatch, PatchDomain, Surface};
use crate::{Error, Result};

/// Tangents closer to vertical than this make extraction ill-posed.
pub const TANGENCY_TOL: f64 = 1e-6;

/// Why a cylinder is not graphical, located at a probe.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// The probe line meets the surface more than once.
    MultipleCrossings { probe: Vec<f64>, count: usize },
    /// The probe line misses the surface inside the height range.
    Gap { probe: Vec<f64> },
    VerticalTangency { probe: Vec<f64>, height: f64 },
}

/// The extracted graph `g` and its sup-norms.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction {
    /// `g` on the probe grid, as a patch over `B^n(â, r − δ)`.
    pub graph: GraphPatch,
    /// `sup |g − ã|`.
    pub sup_offset: f64,
    pub sup_grad: f64,
    /// `sup |D²g|` (Frobenius).
    pub sup_hess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphReport {
    pub cylinder: Cylinder,
    pub probe_spacing: f64,
    pub graphical: bool,
    /// Largest number of crossings on a single probe line.
    pub sheets: usize,
    pub extraction: Option<Extraction>,
    pub witness: Option<Witness>,
}

/// Probe grid: the active nodes of a ball patch with spacing `2r/N`.
fn probe_layout(cyl: &Cylinder, delta: f64) -> Result<(f64, usize)> {
    let r = cyl.radius();
    let mut count = (2.0 * r / delta).ceil() as usize;
    count = count.max(9);
    Ok((2.0 * r / count as f64, count))
}

/// Decides graphicality of `surface` inside `cyl` with probe spacing
/// `delta` (default: half the native resolution).
pub fn is_graphical(surface: &Surface, cyl: &Cylinder, delta: Option<f64>) -> Result<GraphReport> {
    let n = surface.dim();
    if cyl.dim() != n {
        return Err(Error::config(
            "graphicality.cylinder",
            format!("cylinder is over R^{}, surface has dimension {n}", cyl.dim()),
        ));
    }
    let native = surface.native_resolution();
    let delta = delta.unwrap_or(0.5 * native);
    if !(delta > 0.0 && delta <= native * (1.0 + 1e-12)) {
        return Err(Error::config(
            "graphicality.probe_spacing",
            format!("{delta} must lie in (0, native resolution {native}]"),
        ));
    }
    if cyl.is_empty() {
        return Ok(GraphReport {
            cylinder: cyl.clone(),
            probe_spacing: delta,
            graphical: true,
            sheets: 0,
            extraction: None,
            witness: None,
        });
    }
    let (step, count) = probe_layout(cyl, delta)?;
    let inner = cyl.radius() - step;
    // Template patch whose active nodes are the probes.
    let per_axis = count - 1;
    let mut g = GraphPatch::new(
        cyl.base().to_vec(),
        inner,
        step,
        PatchDomain::Ball,
        vec![0.0; per_axis.pow(n as u32)],
    )?;
    let mut values = vec![0.0; g.node_count()];
    let mut sheets = 0;
    let level = cyl.level();
    let mut witness = match surface {
        Surface::Curve(c) => vertical_edge(c, cyl),
        Surface::Graph(_) => None,
    };
    for i in g.active_nodes() {
        let probe = g.node_position(i);
        let hits = match surface {
            Surface::Curve(c) => curve_crossings(c, probe[0], level, cyl.height()),
            Surface::Graph(p) => match p.interpolate(&probe) {
                Some(v) if (v - level).abs() < cyl.height() => Crossings {
                    heights: vec![v],
                    tangency: None,
                },
                _ => Crossings::default(),
            },
        };
        sheets = sheets.max(hits.heights.len());
        if witness.is_none() {
            witness = if let Some(height) = hits.tangency {
                Some(Witness::VerticalTangency {
                    probe: probe.clone(),
                    height,
                })
            } else if hits.heights.len() > 1 {
                Some(Witness::MultipleCrossings {
                    probe: probe.clone(),
                    count: hits.heights.len(),
                })
            } else if hits.heights.is_empty() {
                Some(Witness::Gap { probe: probe.clone() })
            } else {
                None
            };
        }
        if let Some(&h) = hits.heights.first() {
            values[i] = h;
        }
    }
    let graphical = witness.is_none();
    let extraction = if graphical {
        g.set_values(values)?;
        g.set_time(surface.time());
        Some(extract(g, level))
    } else {
        None
    };
    // A multiple-crossing witness is more informative than a gap elsewhere.
    if let Some(Witness::Gap { .. }) = witness {
        if sheets > 1 {
            witness = first_multiple(surface, cyl, step, count).or(witness);
        }
    }
    Ok(GraphReport {
        cylinder: cyl.clone(),
        probe_spacing: step,
        graphical,
        sheets,
        extraction,
        witness,
    })
}

fn first_multiple(surface: &Surface, cyl: &Cylinder, step: f64, count: usize) -> Option<Witness> {
    let c = surface.as_curve()?;
    (1..count).find_map(|i| {
        let x = cyl.base()[0] - cyl.radius() + step * i as f64;
        let hits = curve_crossings(c, x, cyl.level(), cyl.height());
        (hits.heights.len() > 1).then(|| Witness::MultipleCrossings {
            probe: vec![x],
            count: hits.heights.len(),
        })
    })
}

fn extract(g: GraphPatch, level: f64) -> Extraction {
    let mut sup_offset = 0.0f64;
    let mut sup_grad = 0.0f64;
    let mut sup_hess = 0.0f64;
    for i in g.active_nodes() {
        sup_offset = sup_offset.max((g.values()[i] - level).abs());
        let df = g.gradient_lenient(i);
        sup_grad = sup_grad.max(df.iter().map(|x| x * x).sum::<f64>().sqrt());
        sup_hess = sup_hess.max(g.hessian_lenient(i).frobenius_sq().sqrt());
    }
    Extraction {
        graph: g,
        sup_offset,
        sup_grad,
        sup_hess,
    }
}

/// An edge inside the cylinder that is vertical to within `TANGENCY_TOL`.
fn vertical_edge(c: &Curve, cyl: &Cylinder) -> Option<Witness> {
    let (x0, r) = (cyl.base()[0], cyl.radius());
    let (level, h) = (cyl.level(), cyl.height());
    (0..c.edge_count()).find_map(|e| {
        let (a, b) = c.edge(e);
        let dx = b[0] - a[0];
        let len = dx.hypot(b[1] - a[1]);
        if dx.abs() / len >= TANGENCY_TOL {
            return None;
        }
        let x = 0.5 * (a[0] + b[0]);
        let (ymin, ymax) = (a[1].min(b[1]), a[1].max(b[1]));
        let inside = (x - x0).abs() < r && ymax > level - h && ymin < level + h;
        inside.then(|| Witness::VerticalTangency {
            probe: vec![x],
            height: 0.5 * (ymin.max(level - h) + ymax.min(level + h)),
        })
    })
}

#[derive(Default)]
struct Crossings {
    heights: Vec<f64>,
    tangency: Option<f64>,
}

/// Crossings of the vertical line `x = p` with a polyline, restricted to
/// `|y − level| < height`. Edges own their left endpoint (half-open rule),
/// so a line through a vertex is counted once.
fn curve_crossings(c: &Curve, p: f64, level: f64, height: f64) -> Crossings {
    let mut out = Crossings::default();
    let v = c.vertices();
    let m = v.len();
    for e in 0..c.edge_count() {
        let (a, b) = c.edge(e);
        let (lo, hi) = if a[0] <= b[0] { (a, b) } else { (b, a) };
        if lo[0] == hi[0] {
            // exactly vertical edge on the probe line
            if lo[0] == p {
                let (ymin, ymax) = (lo[1].min(hi[1]), lo[1].max(hi[1]));
                if ymax > level - height && ymin < level + height {
                    out.tangency.get_or_insert(0.5 * (ymin + ymax));
                }
            }
            continue;
        }
        if !(lo[0] <= p && p < hi[0]) {
            continue;
        }
        let s = (p - a[0]) / (b[0] - a[0]);
        let y_lin = a[1] + s * (b[1] - a[1]);
        if (y_lin - level).abs() >= height {
            continue;
        }
        let dx = b[0] - a[0];
        let len = dx.hypot(b[1] - a[1]);
        if dx.abs() / len < TANGENCY_TOL {
            out.tangency.get_or_insert(y_lin);
        }
        let prev = if c.is_closed() || e > 0 { Some(v[(e + m - 1) % m]) } else { None };
        let next = if c.is_closed() || e + 2 < m { Some(v[(e + 2) % m]) } else { None };
        out.heights.push(smooth_height(prev, a, b, next, p).unwrap_or(y_lin));
    }
    out
}

/// Blend of the two parabolas through `(prev, a, b)` and `(a, b, next)`,
/// used when the four vertices are monotone in `x`. Reproduces quadratics.
fn smooth_height(
    prev: Option<[f64; 2]>,
    a: [f64; 2],
    b: [f64; 2],
    next: Option<[f64; 2]>,
    p: f64,
) -> Option<f64> {
    let (q, r) = (prev?, next?);
    let xs = [q[0], a[0], b[0], r[0]];
    let increasing = xs.windows(2).all(|w| w[0] < w[1]);
    let decreasing = xs.windows(2).all(|w| w[0] > w[1]);
    if !(increasing || decreasing) {
        return None;
    }
    let quad = |u: [f64; 2], v: [f64; 2], w: [f64; 2]| {
        let l0 = (p - v[0]) * (p - w[0]) / ((u[0] - v[0]) * (u[0] - w[0]));
        let l1 = (p - u[0]) * (p - w[0]) / ((v[0] - u[0]) * (v[0] - w[0]));
        let l2 = (p - u[0]) * (p - v[0]) / ((w[0] - u[0]) * (w[0] - v[0]));
        l0 * u[1] + l1 * v[1] + l2 * w[1]
    };
    let s = (p - a[0]) / (b[0] - a[0]);
    Some((1.0 - s) * quad(q, a, b) + s * quad(a, b, r))
}

/// Graphicality of every record of a trace.
pub fn graphical_series(trace: &FlowTrace, cyl: &Cylinder, delta: Option<f64>) -> Result<Vec<GraphReport>> {
    trace
        .records
        .iter()
        .map(|r| is_graphical(&r.surface, cyl, delta))
        .collect()
}

/// Earliest recorded time at which the surface is not graphical in `cyl`.
pub fn first_nongraphical_time(trace: &FlowTrace, cyl: &Cylinder, delta: Option<f64>) -> Result<Option<f64>> {
    for r in &trace.records {
        if !is_graphical(&r.surface, cyl, delta)?.graphical {
            return Ok(Some(r.t));
        }
    }
    Ok(None)
}

/// Earliest recorded time from which `hold` consecutive records are
/// graphical. A run of graphical records reaching the end of the trace is
/// accepted even when shorter than `hold`.
pub fn first_graphical_time(
    trace: &FlowTrace,
    cyl: &Cylinder,
    hold: usize,
    delta: Option<f64>,
) -> Result<Option<f64>> {
    let flags: Vec<bool> = graphical_series(trace, cyl, delta)?
        .iter()
        .map(|g| g.graphical)
        .collect();
    Ok(first_held(&flags, hold.max(1)).map(|i| trace.records[i].t))
}

pub(crate) fn first_held(flags: &[bool], hold: usize) -> Option<usize> {
    let mut run = 0;
    for (i, &f) in flags.iter().enumerate() {
        if f {
            run += 1;
            if run == hold {
                return Some(i + 1 - hold);
            }
        } else {
            run = 0;
        }
    }
    (run > 0).then(|| flags.len() - run)
}
