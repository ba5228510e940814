//! Explicit Euler for graph mean curvature flow
//! `f_t = (δ_ij − D_if D_jf/(1+|Df|²)) D_iD_jf`.

use crate::geometry::{GraphPatch, PatchDomain};
use crate::{Error, Result};

use super::BoundaryCondition;

/// Largest admissible CFL factor.
pub const MAX_CFL: f64 = 0.25;

/// Precomputed update pattern for one grid.
pub(crate) struct GraphStepper {
    n: usize,
    per_axis: usize,
    strides: Vec<usize>,
    periodic: bool,
    /// Nodes advanced by the scheme; every other active node stays frozen.
    update: Vec<usize>,
    h: f64,
}

impl GraphStepper {
    pub(crate) fn new(p: &GraphPatch, bc: BoundaryCondition) -> Result<Self> {
        let n = p.dim();
        if p.codim() != 1 {
            return Err(Error::invalid("graph patch", "the solver requires codimension 1"));
        }
        let periodic = bc == BoundaryCondition::Periodic;
        if periodic && n > 1 && p.domain() != PatchDomain::Box {
            return Err(Error::config(
                "flow.boundary",
                "periodic boundary needs a box domain in dimension >= 2",
            ));
        }
        let per_axis = p.nodes_per_axis();
        let strides = (0..n).map(|a| p.stride(a)).collect();
        let mut s = Self {
            n,
            per_axis,
            strides,
            periodic,
            update: Vec::new(),
            h: p.spacing(),
        };
        s.update = (0..p.node_count())
            .filter(|&i| p.is_active(i) && s.updatable(p, i))
            .collect();
        Ok(s)
    }

    fn coord(&self, i: usize, a: usize) -> usize {
        (i / self.strides[a]) % self.per_axis
    }

    /// Node `d ∈ {−1, 1}` steps along `a`; wraps with period `N − 1` when
    /// periodic.
    fn nb(&self, i: usize, a: usize, d: isize) -> Option<usize> {
        let j = self.coord(i, a) as isize;
        let k = if self.periodic {
            let period = (self.per_axis - 1) as isize;
            (j + d).rem_euclid(period)
        } else {
            let k = j + d;
            if k < 0 || k >= self.per_axis as isize {
                return None;
            }
            k
        };
        Some((i as isize + (k - j) * self.strides[a] as isize) as usize)
    }

    fn updatable(&self, p: &GraphPatch, i: usize) -> bool {
        if self.periodic {
            // the last layer duplicates the first
            return (0..self.n).all(|a| self.coord(i, a) < self.per_axis - 1);
        }
        for a in 0..self.n {
            for da in [-1, 1] {
                let Some(j) = self.nb(i, a, da) else { return false };
                if !p.is_active(j) {
                    return false;
                }
                for b in 0..a {
                    for db in [-1, 1] {
                        match self.nb(j, b, db) {
                            Some(k) if p.is_active(k) => {}
                            _ => return false,
                        }
                    }
                }
            }
        }
        true
    }

    /// Writes the normal speed times `W` (the vertical velocity) into `out`
    /// for updated nodes and returns `max |Df|²` over them.
    pub(crate) fn velocity(&self, f: &[f64], out: &mut [f64]) -> f64 {
        let h = self.h;
        let (inv2h, invh2, inv4h2) = (0.5 / h, 1.0 / (h * h), 0.25 / (h * h));
        let mut max_g2 = 0.0f64;
        let mut df = [0.0f64; 3];
        let mut plus = [0usize; 3];
        let mut minus = [0usize; 3];
        for &i in &self.update {
            let fi = f[i];
            let mut g2 = 0.0;
            for a in 0..self.n {
                plus[a] = self.nb(i, a, 1).expect("updated nodes have neighbors");
                minus[a] = self.nb(i, a, -1).expect("updated nodes have neighbors");
                df[a] = (f[plus[a]] - f[minus[a]]) * inv2h;
                g2 += df[a] * df[a];
            }
            let w2 = 1.0 + g2;
            let mut v = 0.0;
            for a in 0..self.n {
                let faa = (f[plus[a]] - 2.0 * fi + f[minus[a]]) * invh2;
                v += (1.0 - df[a] * df[a] / w2) * faa;
                for b in 0..a {
                    let pp = self.nb(plus[a], b, 1).unwrap();
                    let pm = self.nb(plus[a], b, -1).unwrap();
                    let mp = self.nb(minus[a], b, 1).unwrap();
                    let mm = self.nb(minus[a], b, -1).unwrap();
                    let fab = (f[pp] - f[pm] - f[mp] + f[mm]) * inv4h2;
                    v -= 2.0 * df[a] * df[b] / w2 * fab;
                }
            }
            out[i] = v;
            max_g2 = max_g2.max(g2);
        }
        max_g2
    }

    pub(crate) fn cfl_limit(&self, lambda: f64, max_g2: f64) -> f64 {
        lambda * self.h * self.h / (1.0 + max_g2)
    }

    /// `f += dt·v` on updated nodes, then refreshes periodic copies.
    pub(crate) fn apply(&self, f: &mut [f64], v: &[f64], dt: f64) -> bool {
        let mut finite = true;
        for &i in &self.update {
            f[i] += dt * v[i];
            finite &= f[i].is_finite();
        }
        if self.periodic {
            let last = self.per_axis - 1;
            for i in 0..f.len() {
                let mut src = i;
                for a in 0..self.n {
                    if self.coord(src, a) == last {
                        src -= last * self.strides[a];
                    }
                }
                if src != i {
                    f[i] = f[src];
                }
            }
        }
        finite
    }
}

/// One explicit Euler step of graph MCF with time step `dt`.
///
/// A `dt` above `0.25 h²/(1 + max|Df|²)` is rejected with [`Error::Cfl`];
/// a non-finite result gives [`Error::BlowUp`].
pub fn step_graph_mcf(patch: &GraphPatch, dt: f64, bc: BoundaryCondition) -> Result<GraphPatch> {
    let stepper = GraphStepper::new(patch, bc)?;
    let mut v = vec![0.0; patch.node_count()];
    let max_g2 = stepper.velocity(patch.values(), &mut v);
    let limit = stepper.cfl_limit(MAX_CFL, max_g2);
    if !(dt > 0.0 && dt <= limit) {
        return Err(Error::Cfl { dt, limit });
    }
    let mut next = patch.clone();
    let t = patch.time() + dt;
    if !stepper.apply(next.values_mut(), &v, dt) {
        return Err(Error::BlowUp { t });
    }
    next.set_time(t);
    Ok(next)
}
