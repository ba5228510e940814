//! Graphs sampled on uniform tensor grids.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::graph::{mean_curvature_graph, second_fundamental_norm, graph_normal, SymMatrix};
use super::sample::{SampleBoundary, SurfaceSample};
use super::SURFACE_FORMAT_VERSION;
use crate::{Error, Result};

/// Region of the parameter space covered by active nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PatchDomain {
    /// Nodes inside the closed ball `B^n(center, radius)`.
    #[default]
    Ball,
    /// Every node of the bounding box.
    Box,
}

/// A scalar field `f` on the grid `center − radius + h·i`, `i ∈ {0..N}^n`,
/// stored row-major with the last axis fastest.
#[derive(Clone, Debug)]
pub struct GraphPatch {
    center: Vec<f64>,
    radius: f64,
    spacing: f64,
    per_axis: usize,
    domain: PatchDomain,
    codim: usize,
    time: f64,
    values: Vec<f64>,
    layout: Arc<Layout>,
}

impl PartialEq for GraphPatch {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center
            && self.radius == other.radius
            && self.spacing == other.spacing
            && self.domain == other.domain
            && self.codim == other.codim
            && self.time == other.time
            && self.values == other.values
    }
}

/// Geometry-only data shared between clones of a patch.
#[derive(Debug)]
struct Layout {
    active: Vec<bool>,
    weights: Vec<f64>,
}

/// At most four weighted nodes: enough for every 1-D stencil used here.
#[derive(Clone, Copy)]
struct Stencil {
    len: usize,
    items: [(usize, f64); 4],
}

impl Stencil {
    const EMPTY: Stencil = Stencil {
        len: 0,
        items: [(0, 0.0); 4],
    };

    fn new(items: &[(usize, f64)]) -> Self {
        let mut s = Self::EMPTY;
        s.items[..items.len()].copy_from_slice(items);
        s.len = items.len();
        s
    }

    fn apply(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.items[..self.len].iter().map(|&(k, w)| w * f(k)).sum()
    }
}

impl GraphPatch {
    /// Builds a patch from values on every box node.
    pub fn new(
        center: Vec<f64>,
        radius: f64,
        spacing: f64,
        domain: PatchDomain,
        values: Vec<f64>,
    ) -> Result<Self> {
        Self::with_codim(center, radius, spacing, domain, 1, 0.0, values)
    }

    pub fn with_codim(
        center: Vec<f64>,
        radius: f64,
        spacing: f64,
        domain: PatchDomain,
        codim: usize,
        time: f64,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = center.len();
        if n == 0 || n > 3 {
            return Err(Error::invalid("graph patch", format!("dimension {n} not in 1..=3")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("graph patch", "non-finite center"));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::invalid("graph patch", format!("radius {radius} must be > 0")));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::invalid("graph patch", format!("spacing {spacing} must be > 0")));
        }
        if codim == 0 {
            return Err(Error::invalid("graph patch", "codimension must be positive"));
        }
        if !time.is_finite() {
            return Err(Error::invalid("graph patch", "non-finite time"));
        }
        let per_axis = (2.0 * radius / spacing + 1e-9).floor() as usize + 1;
        if per_axis < 8 {
            return Err(Error::invalid(
                "graph patch",
                format!("{per_axis} nodes per axis, need at least 8"),
            ));
        }
        let total = per_axis.pow(n as u32);
        if values.len() != total {
            return Err(Error::invalid(
                "graph patch",
                format!("expected {total} values, got {}", values.len()),
            ));
        }
        let mut patch = Self {
            center,
            radius,
            spacing,
            per_axis,
            domain,
            codim,
            time,
            values,
            layout: Arc::new(Layout {
                active: Vec::new(),
                weights: Vec::new(),
            }),
        };
        let active: Vec<bool> = (0..total).map(|i| patch.inside_domain(i)).collect();
        // The central line along each axis decides the active count per axis.
        let mid = patch.center_line_count(&active);
        if mid < 8 {
            return Err(Error::invalid(
                "graph patch",
                format!("{mid} active nodes per axis, need at least 8"),
            ));
        }
        if let Some(i) = (0..total).find(|&i| active[i] && !patch.values[i].is_finite()) {
            return Err(Error::invalid(
                "graph patch",
                format!("non-finite value at active node {i}"),
            ));
        }
        let weights = patch.compute_weights(&active);
        patch.layout = Arc::new(Layout { active, weights });
        Ok(patch)
    }

    /// Samples `f` at every node of the bounding box.
    pub fn from_fn(
        center: Vec<f64>,
        radius: f64,
        spacing: f64,
        domain: PatchDomain,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<Self> {
        let n = center.len();
        let per_axis = (2.0 * radius / spacing + 1e-9).floor() as usize + 1;
        let total = per_axis.checked_pow(n as u32).unwrap_or(0);
        let mut x = vec![0.0; n];
        let values = (0..total)
            .map(|flat| {
                let mut rem = flat;
                for a in (0..n).rev() {
                    x[a] = center[a] - radius + spacing * (rem % per_axis) as f64;
                    rem /= per_axis;
                }
                f(&x)
            })
            .collect();
        Self::new(center, radius, spacing, domain, values)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn domain(&self) -> PatchDomain {
        self.domain
    }

    pub fn nodes_per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Replaces the values, keeping the grid. Lengths must match.
    pub fn set_values(&mut self, values: Vec<f64>) -> Result<()> {
        if values.len() != self.values.len() {
            return Err(Error::invalid("graph patch", "value count mismatch"));
        }
        self.values = values;
        Ok(())
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_active(&self, node: usize) -> bool {
        self.layout.active.get(node).copied().unwrap_or(false)
    }

    pub fn active_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.values.len()).filter(move |&i| self.layout.active[i])
    }

    /// Quadrature weight `|cell ∩ domain|` of each node (zero when inactive).
    pub fn quadrature_weights(&self) -> &[f64] {
        &self.layout.weights
    }

    pub fn multi_index(&self, node: usize) -> Vec<usize> {
        let n = self.dim();
        let mut idx = vec![0; n];
        let mut rem = node;
        for a in (0..n).rev() {
            idx[a] = rem % self.per_axis;
            rem /= self.per_axis;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.per_axis + i)
    }

    pub fn node_position(&self, node: usize) -> Vec<f64> {
        self.multi_index(node)
            .iter()
            .enumerate()
            .map(|(a, &i)| self.coord(i, a))
            .collect()
    }

    pub(crate) fn coord(&self, i: usize, axis: usize) -> f64 {
        self.center[axis] - self.radius + self.spacing * i as f64
    }

    fn axis_stride(&self, axis: usize) -> usize {
        self.per_axis.pow((self.dim() - 1 - axis) as u32)
    }

    pub(crate) fn stride(&self, axis: usize) -> usize {
        self.axis_stride(axis)
    }

    fn inside_domain(&self, node: usize) -> bool {
        match self.domain {
            PatchDomain::Box => true,
            PatchDomain::Ball => {
                let x = self.node_position(node);
                super::dist_sq(&x, &self.center) <= self.radius * self.radius * (1.0 + 1e-12)
            }
        }
    }

    fn center_line_count(&self, active: &[bool]) -> usize {
        let n = self.dim();
        let mid = self.per_axis / 2;
        (0..n)
            .map(|axis| {
                let mut idx = vec![mid; n];
                (0..self.per_axis)
                    .filter(|&i| {
                        idx[axis] = i;
                        active[self.flat_index(&idx)]
                    })
                    .count()
            })
            .min()
            .unwrap_or(0)
    }

    /// Neighbor `d` steps along `axis`, if it exists and is active.
    fn neighbor(&self, node: usize, axis: usize, d: isize) -> Option<usize> {
        let stride = self.axis_stride(axis);
        let i = (node / stride) % self.per_axis;
        let j = i as isize + d;
        if j < 0 || j >= self.per_axis as isize {
            return None;
        }
        let k = (node as isize + d * stride as isize) as usize;
        self.layout.active[k].then_some(k)
    }

    fn d1(&self, node: usize, axis: usize) -> Option<Stencil> {
        let h = self.spacing;
        let nb = |d| self.neighbor(node, axis, d);
        if let (Some(m), Some(p)) = (nb(-1), nb(1)) {
            return Some(Stencil::new(&[(m, -0.5 / h), (p, 0.5 / h)]));
        }
        if let (Some(p1), Some(p2)) = (nb(1), nb(2)) {
            return Some(Stencil::new(&[(node, -1.5 / h), (p1, 2.0 / h), (p2, -0.5 / h)]));
        }
        if let (Some(m1), Some(m2)) = (nb(-1), nb(-2)) {
            return Some(Stencil::new(&[(node, 1.5 / h), (m1, -2.0 / h), (m2, 0.5 / h)]));
        }
        None
    }

    /// First-order fallback used where no second-order stencil exists.
    fn d1_lenient(&self, node: usize, axis: usize) -> Stencil {
        if let Some(s) = self.d1(node, axis) {
            return s;
        }
        let h = self.spacing;
        if let Some(p) = self.neighbor(node, axis, 1) {
            return Stencil::new(&[(node, -1.0 / h), (p, 1.0 / h)]);
        }
        if let Some(m) = self.neighbor(node, axis, -1) {
            return Stencil::new(&[(node, 1.0 / h), (m, -1.0 / h)]);
        }
        Stencil::EMPTY
    }

    fn d2(&self, node: usize, axis: usize) -> Option<Stencil> {
        let h2 = self.spacing * self.spacing;
        let nb = |d| self.neighbor(node, axis, d);
        if let (Some(m), Some(p)) = (nb(-1), nb(1)) {
            return Some(Stencil::new(&[(m, 1.0 / h2), (node, -2.0 / h2), (p, 1.0 / h2)]));
        }
        for dir in [1isize, -1] {
            if let (Some(a), Some(b), Some(c)) = (nb(dir), nb(2 * dir), nb(3 * dir)) {
                return Some(Stencil::new(&[
                    (node, 2.0 / h2),
                    (a, -5.0 / h2),
                    (b, 4.0 / h2),
                    (c, -1.0 / h2),
                ]));
            }
        }
        None
    }

    fn check_active(&self, node: usize) -> Result<()> {
        if node >= self.values.len() {
            return Err(Error::domain(format!("node {node} out of range")));
        }
        if !self.layout.active[node] {
            return Err(Error::domain(format!("node {node} is inactive")));
        }
        Ok(())
    }

    /// Second-order finite-difference gradient at an active node.
    pub fn gradient(&self, node: usize) -> Result<Vec<f64>> {
        self.check_active(node)?;
        (0..self.dim())
            .map(|a| {
                self.d1(node, a)
                    .map(|s| s.apply(|k| self.values[k]))
                    .ok_or_else(|| Error::domain(format!("no stencil along axis {a} at node {node}")))
            })
            .collect()
    }

    /// Second-order finite-difference Hessian at an active node.
    pub fn hessian(&self, node: usize) -> Result<SymMatrix> {
        self.check_active(node)?;
        let n = self.dim();
        let mut m = SymMatrix::zeros(n);
        let missing = |a| Error::domain(format!("no stencil along axis {a} at node {node}"));
        for a in 0..n {
            let s = self.d2(node, a).ok_or_else(|| missing(a))?;
            m.set_sym(a, a, s.apply(|k| self.values[k]));
            for b in 0..a {
                let ab = self.mixed(node, a, b, false).ok_or_else(|| missing(a))?;
                let ba = self.mixed(node, b, a, false).ok_or_else(|| missing(b))?;
                m.set_sym(a, b, 0.5 * (ab + ba));
            }
        }
        Ok(m)
    }

    /// `D_a(D_b f)` by composing first-derivative stencils.
    fn mixed(&self, node: usize, a: usize, b: usize, lenient: bool) -> Option<f64> {
        let outer = if lenient { self.d1_lenient(node, a) } else { self.d1(node, a)? };
        let mut acc = 0.0;
        for &(k, w) in &outer.items[..outer.len] {
            let inner = if lenient { self.d1_lenient(k, b) } else { self.d1(k, b)? };
            acc += w * inner.apply(|j| self.values[j]);
        }
        Some(acc)
    }

    /// Gradient with first-order (or zero) fallback at nodes lacking a
    /// second-order stencil, e.g. isolated corners of a ball grid.
    pub fn gradient_lenient(&self, node: usize) -> Vec<f64> {
        (0..self.dim())
            .map(|a| self.d1_lenient(node, a).apply(|k| self.values[k]))
            .collect()
    }

    /// Hessian with zero fallback for entries lacking a stencil.
    pub fn hessian_lenient(&self, node: usize) -> SymMatrix {
        let n = self.dim();
        let mut m = SymMatrix::zeros(n);
        for a in 0..n {
            let v = self.d2(node, a).map_or(0.0, |s| s.apply(|k| self.values[k]));
            m.set_sym(a, a, v);
            for b in 0..a {
                let ab = self.mixed(node, a, b, true).unwrap_or(0.0);
                let ba = self.mixed(node, b, a, true).unwrap_or(0.0);
                m.set_sym(a, b, 0.5 * (ab + ba));
            }
        }
        m
    }

    /// `Σ w_i φ(x̂_i, f_i) √(1+|Df_i|²)` over active nodes.
    pub fn integrate_over_graph(&self, phi: impl Fn(&[f64], f64) -> f64) -> f64 {
        let w = &self.layout.weights;
        self.active_nodes()
            .map(|i| {
                let df = self.gradient_lenient(i);
                let jac = (1.0 + df.iter().map(|d| d * d).sum::<f64>()).sqrt();
                let x = self.node_position(i);
                w[i] * phi(&x, self.values[i]) * jac
            })
            .sum()
    }

    /// Bilinear (multilinear) interpolation of `f` at a point of the box.
    /// Returns `None` outside the box or when a corner node is inactive.
    pub fn interpolate(&self, x: &[f64]) -> Option<f64> {
        let n = self.dim();
        let mut base = vec![0usize; n];
        let mut frac = vec![0.0; n];
        for a in 0..n {
            let s = (x[a] - (self.center[a] - self.radius)) / self.spacing;
            if !(s >= -1e-9 && s <= (self.per_axis - 1) as f64 + 1e-9) {
                return None;
            }
            let i = (s.floor().max(0.0) as usize).min(self.per_axis - 2);
            base[a] = i;
            frac[a] = (s - i as f64).clamp(0.0, 1.0);
        }
        let mut acc = 0.0;
        for corner in 0..(1usize << n) {
            let mut idx = base.clone();
            let mut w = 1.0;
            for a in 0..n {
                if corner >> a & 1 == 1 {
                    idx[a] += 1;
                    w *= frac[a];
                } else {
                    w *= 1.0 - frac[a];
                }
            }
            if w == 0.0 {
                continue;
            }
            let k = self.flat_index(&idx);
            if !self.layout.active[k] {
                return None;
            }
            acc += w * self.values[k];
        }
        Some(acc)
    }

    pub fn sample(&self) -> SurfaceSample {
        let n = self.dim();
        let w = &self.layout.weights;
        let cap = self.values.len();
        let mut s = SurfaceSample::with_capacity(n + 1, cap);
        for i in self.active_nodes() {
            let df = self.gradient_lenient(i);
            let d2f = self.hessian_lenient(i);
            let jac = (1.0 + df.iter().map(|d| d * d).sum::<f64>()).sqrt();
            let mut p = self.node_position(i);
            p.push(self.values[i]);
            let normal = graph_normal(&df).unwrap_or_else(|_| vertical(n));
            let a = second_fundamental_norm(&df, &d2f).unwrap_or(f64::NAN);
            let h = mean_curvature_graph(&df, &d2f).unwrap_or(f64::NAN);
            s.push(p, normal, a, h, w[i] * jac);
        }
        // For a box this is the inscribed ball.
        s.boundary = SampleBoundary::Cylinder {
            center: self.center.clone(),
            radius: self.radius,
        };
        s
    }

    /// Largest `|Df|` over active nodes.
    pub fn max_gradient(&self) -> f64 {
        self.active_nodes()
            .map(|i| super::norm(&self.gradient_lenient(i)))
            .fold(0.0, f64::max)
    }

    fn compute_weights(&self, active: &[bool]) -> Vec<f64> {
        let n = self.dim();
        let h = self.spacing;
        let full = h.powi(n as i32);
        let total = self.values.len();
        let mut weights = vec![0.0; total];
        match self.domain {
            PatchDomain::Box => {
                for (i, w) in weights.iter_mut().enumerate() {
                    let idx = self.multi_index(i);
                    *w = idx
                        .iter()
                        .map(|&k| if k == 0 || k == self.per_axis - 1 { 0.5 * h } else { h })
                        .product();
                }
            }
            PatchDomain::Ball => {
                const SUB: usize = 16;
                let r2 = self.radius * self.radius;
                let half_diag_sq = n as f64 * 0.25 * h * h;
                let mut interior = 0.0;
                let mut boundary = 0.0;
                let mut is_boundary = vec![false; total];
                for i in 0..total {
                    if !active[i] {
                        continue;
                    }
                    let x = self.node_position(i);
                    let d = super::dist_sq(&x, &self.center).sqrt();
                    if (d + half_diag_sq.sqrt()).powi(2) <= r2 {
                        weights[i] = full;
                        interior += full;
                        continue;
                    }
                    // Midpoint subsampling of cell ∩ ball.
                    let cells = SUB.pow(n as u32);
                    let mut hits = 0usize;
                    let mut y = vec![0.0; n];
                    for c in 0..cells {
                        let mut rem = c;
                        for a in 0..n {
                            let k = rem % SUB;
                            rem /= SUB;
                            y[a] = x[a] - 0.5 * h + h * (k as f64 + 0.5) / SUB as f64;
                        }
                        if super::dist_sq(&y, &self.center) <= r2 {
                            hits += 1;
                        }
                    }
                    let wgt = full * hits as f64 / cells as f64;
                    weights[i] = wgt;
                    boundary += wgt;
                    is_boundary[i] = true;
                }
                let vol = ball_volume(n, self.radius);
                if boundary > 0.0 && vol > interior {
                    let scale = (vol - interior) / boundary;
                    for i in 0..total {
                        if is_boundary[i] {
                            weights[i] *= scale;
                        }
                    }
                }
            }
        }
        weights
    }

    pub(crate) fn to_doc(&self) -> PatchDoc {
        PatchDoc {
            version: SURFACE_FORMAT_VERSION,
            center: self.center.clone(),
            radius: self.radius,
            spacing: self.spacing,
            domain: self.domain,
            codim: self.codim,
            time: self.time,
            values: self.values.clone(),
        }
    }

    pub(crate) fn from_doc(d: PatchDoc) -> Result<Self> {
        if d.version != SURFACE_FORMAT_VERSION {
            return Err(Error::invalid("graph patch", format!("unsupported version {}", d.version)));
        }
        Self::with_codim(d.center, d.radius, d.spacing, d.domain, d.codim, d.time, d.values)
    }
}

fn vertical(n: usize) -> Vec<f64> {
    let mut v = vec![0.0; n + 1];
    v[n] = 1.0;
    v
}

/// Lebesgue measure of `B^n(0, r)` for `n ≤ 3`.
pub(crate) fn ball_volume(n: usize, r: f64) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0 * r,
        2 => std::f64::consts::PI * r * r,
        3 => 4.0 / 3.0 * std::f64::consts::PI * r.powi(3),
        _ => panic!("ball volume only tabulated for n <= 3"),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PatchDoc {
    version: u32,
    center: Vec<f64>,
    radius: f64,
    spacing: f64,
    #[serde(default)]
    domain: PatchDomain,
    #[serde(default = "one")]
    codim: usize,
    time: f64,
    values: Vec<f64>,
}

fn one() -> usize {
    1
}
