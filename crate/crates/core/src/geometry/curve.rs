//! Polylines in the plane.

use serde::{Deserialize, Serialize};

use super::sample::{SampleBoundary, SurfaceSample};
use super::SURFACE_FORMAT_VERSION;
use crate::{Error, Result};

pub type Point = [f64; 2];

/// A polyline in `R²`. When `closed`, the last vertex connects to the first;
/// otherwise the two endpoints are boundary points.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    vertices: Vec<Point>,
    closed: bool,
    time: f64,
}

/// Discrete Frenet data at a vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurveFrame {
    pub tangent: Point,
    /// Left rotation of the tangent; inward for counter-clockwise curves.
    pub normal: Point,
    /// Signed Menger curvature, positive where the curve turns left.
    pub curvature: f64,
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn len(a: Point) -> f64 {
    a[0].hypot(a[1])
}

impl Curve {
    /// Validates and builds a curve, including the O(m²) simplicity check.
    pub fn new(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        let c = Self::new_unchecked_simplicity(vertices, closed)?;
        if !c.is_simple() {
            return Err(Error::invalid("curve", "self-intersecting"));
        }
        Ok(c)
    }

    /// As [`Curve::new`] without the simplicity check.
    pub fn new_unchecked_simplicity(vertices: Vec<Point>, closed: bool) -> Result<Self> {
        if vertices.len() < 8 {
            return Err(Error::invalid(
                "curve",
                format!("{} vertices, need at least 8", vertices.len()),
            ));
        }
        if vertices.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("curve", "non-finite vertex"));
        }
        let c = Self {
            vertices,
            closed,
            time: 0.0,
        };
        if let Some(i) = (0..c.edge_count()).find(|&i| c.edge_length(i) == 0.0) {
            return Err(Error::invalid("curve", format!("repeated vertex at {i}")));
        }
        Ok(c)
    }

    /// Regular `m`-gon with vertices on the circle of radius `r`,
    /// counter-clockwise starting at angle `phase`.
    pub fn regular_polygon(center: Point, r: f64, m: usize, phase: f64) -> Result<Self> {
        let v = (0..m)
            .map(|k| {
                let a = phase + std::f64::consts::TAU * k as f64 / m as f64;
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            })
            .collect();
        Self::new_unchecked_simplicity(v, true)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = t;
        self
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut Vec<Point> {
        &mut self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn set_time(&mut self, t: f64) {
        self.time = t;
    }

    pub fn edge_count(&self) -> usize {
        if self.closed {
            self.vertices.len()
        } else {
            self.vertices.len() - 1
        }
    }

    /// Endpoints of edge `i` (from vertex `i` to its successor).
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let m = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % m])
    }

    pub fn edge_length(&self, i: usize) -> f64 {
        let (a, b) = self.edge(i);
        len(sub(b, a))
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.edge_count()).map(|i| self.edge(i))
    }

    pub fn length(&self) -> f64 {
        (0..self.edge_count()).map(|i| self.edge_length(i)).sum()
    }

    pub fn min_edge(&self) -> f64 {
        (0..self.edge_count()).map(|i| self.edge_length(i)).fold(f64::INFINITY, f64::min)
    }

    pub fn max_edge(&self) -> f64 {
        (0..self.edge_count()).map(|i| self.edge_length(i)).fold(0.0, f64::max)
    }

    /// Shoelace area, positive for counter-clockwise curves. Open curves
    /// are closed by their chord.
    pub fn signed_area(&self) -> f64 {
        let m = self.vertices.len();
        0.5 * (0..m)
            .map(|i| cross(self.vertices[i], self.vertices[(i + 1) % m]))
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    /// `4π·area / length²`, which is 1 exactly for a round circle.
    pub fn isoperimetric_ratio(&self) -> f64 {
        let l = self.length();
        l * l / (4.0 * std::f64::consts::PI * self.area())
    }

    /// Neighbors of vertex `i`, or `None` at an endpoint of an open curve.
    fn triple(&self, i: usize) -> Option<(Point, Point, Point)> {
        let m = self.vertices.len();
        if !self.closed && (i == 0 || i == m - 1) {
            return None;
        }
        Some((
            self.vertices[(i + m - 1) % m],
            self.vertices[i],
            self.vertices[(i + 1) % m],
        ))
    }

    /// Tangent, normal and Menger curvature `2 sin∠/|c−a|` at vertex `i`.
    /// Endpoints of open curves get zero curvature and one-sided tangents.
    pub fn curve_quantities(&self, i: usize) -> Result<CurveFrame> {
        let m = self.vertices.len();
        if i >= m {
            return Err(Error::domain(format!("vertex {i} out of range")));
        }
        let (chord, kappa) = match self.triple(i) {
            Some((a, b, c)) => {
                let (ab, bc, ac) = (sub(b, a), sub(c, b), sub(c, a));
                let (lab, lbc, lac) = (len(ab), len(bc), len(ac));
                if lab == 0.0 || lbc == 0.0 || lac == 0.0 {
                    return Err(Error::domain(format!("repeated vertex near {i}")));
                }
                (ac, 2.0 * cross(ab, bc) / (lab * lbc * lac))
            }
            None => {
                let d = if i == 0 {
                    sub(self.vertices[1], self.vertices[0])
                } else {
                    sub(self.vertices[m - 1], self.vertices[m - 2])
                };
                if len(d) == 0.0 {
                    return Err(Error::domain(format!("repeated vertex near {i}")));
                }
                (d, 0.0)
            }
        };
        let l = len(chord);
        let tangent = [chord[0] / l, chord[1] / l];
        Ok(CurveFrame {
            tangent,
            normal: [-tangent[1], tangent[0]],
            curvature: kappa,
        })
    }

    /// Half the length of the edges adjacent to vertex `i`.
    pub fn vertex_weight(&self, i: usize) -> f64 {
        let m = self.vertices.len();
        let prev = if self.closed || i > 0 {
            self.edge_length((i + m - 1) % m)
        } else {
            0.0
        };
        let next = if self.closed || i + 1 < m {
            self.edge_length(i)
        } else {
            0.0
        };
        0.5 * (prev + next)
    }

    /// True when no two non-adjacent edges meet.
    pub fn is_simple(&self) -> bool {
        let e = self.edge_count();
        let boxes: Vec<[f64; 4]> = self
            .edges()
            .map(|(a, b)| [a[0].min(b[0]), a[0].max(b[0]), a[1].min(b[1]), a[1].max(b[1])])
            .collect();
        for i in 0..e {
            for j in i + 1..e {
                let adjacent = j == i + 1 || (self.closed && i == 0 && j == e - 1);
                if adjacent {
                    continue;
                }
                let (p, q) = (boxes[i], boxes[j]);
                if p[1] < q[0] || q[1] < p[0] || p[3] < q[2] || q[3] < p[2] {
                    continue;
                }
                let (a, b) = self.edge(i);
                let (c, d) = self.edge(j);
                if segments_meet(a, b, c, d) {
                    return false;
                }
            }
        }
        true
    }

    /// Length of the curve inside the closed disc `B(center, r)`, with
    /// exact clipping of each edge.
    pub fn length_in_ball(&self, center: Point, r: f64) -> f64 {
        self.edges().map(|(a, b)| segment_length_in_ball(a, b, center, r)).sum()
    }

    pub fn sample(&self) -> SurfaceSample {
        let m = self.vertices.len();
        let mut s = SurfaceSample::with_capacity(2, m);
        for i in 0..m {
            let (p, nu, k) = match self.curve_quantities(i) {
                Ok(f) => (self.vertices[i], f.normal, f.curvature),
                Err(_) => (self.vertices[i], [0.0, 1.0], f64::NAN),
            };
            s.push(p.to_vec(), nu.to_vec(), k.abs(), k, self.vertex_weight(i));
        }
        if !self.closed {
            s.boundary = SampleBoundary::Points(vec![
                self.vertices[0].to_vec(),
                self.vertices[m - 1].to_vec(),
            ]);
        }
        s
    }

    pub(crate) fn to_doc(&self) -> CurveDoc {
        CurveDoc {
            version: SURFACE_FORMAT_VERSION,
            closed: self.closed,
            time: self.time,
            vertices: self.vertices.clone(),
        }
    }

    pub(crate) fn from_doc(d: CurveDoc) -> Result<Self> {
        if d.version != SURFACE_FORMAT_VERSION {
            return Err(Error::invalid("curve", format!("unsupported version {}", d.version)));
        }
        if !d.time.is_finite() {
            return Err(Error::invalid("curve", "non-finite time"));
        }
        Ok(Self::new(d.vertices, d.closed)?.with_time(d.time))
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed-segment intersection test, touching included.
pub(crate) fn segments_meet(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

/// Length of `[a, b] ∩ B(center, r)`.
pub(crate) fn segment_length_in_ball(a: Point, b: Point, center: Point, r: f64) -> f64 {
    let d = sub(b, a);
    let f = sub(a, center);
    let qa = d[0] * d[0] + d[1] * d[1];
    if qa == 0.0 {
        return 0.0;
    }
    let qb = 2.0 * (f[0] * d[0] + f[1] * d[1]);
    let qc = f[0] * f[0] + f[1] * f[1] - r * r;
    let disc = qb * qb - 4.0 * qa * qc;
    if disc <= 0.0 {
        return 0.0;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * qa.sqrt()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CurveDoc {
    version: u32,
    closed: bool,
    time: f64,
    vertices: Vec<Point>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Surface;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn polygon_curvature() {
        for (r, want) in [(1.0, 1.0), (2.0, 0.5)] {
            let c = Curve::regular_polygon([0.3, -1.0], r, 256, 0.1).unwrap();
            for i in 0..c.len() {
                let f = c.curve_quantities(i).unwrap();
                assert!((f.curvature - want).abs() < 1e-3);
                // inward normal on a counter-clockwise polygon
                let v = c.vertices()[i];
                let out = [(v[0] - 0.3) / r, (v[1] + 1.0) / r];
                assert!(f.normal[0] * out[0] + f.normal[1] * out[1] < -0.99);
            }
        }
    }

    #[test]
    fn clockwise_flips_sign_but_not_motion() {
        let mut c = Curve::regular_polygon([0.0, 0.0], 1.0, 64, 0.0).unwrap();
        c.vertices_mut().reverse();
        let f = c.curve_quantities(5).unwrap();
        let v = c.vertices()[5];
        assert!(f.curvature < 0.0);
        let motion = [f.curvature * f.normal[0], f.curvature * f.normal[1]];
        assert!(motion[0] * v[0] + motion[1] * v[1] < 0.0);
    }

    #[test]
    fn colinear_triple_is_flat() {
        let v: Vec<Point> = (0..10).map(|i| [i as f64 * 0.1, 2.0 * i as f64 * 0.1]).collect();
        let c = Curve::new(v, false).unwrap();
        assert_eq!(c.curve_quantities(4).unwrap().curvature, 0.0);
        assert_eq!(c.curve_quantities(0).unwrap().curvature, 0.0);
    }

    #[test]
    fn repeated_vertex_rejected() {
        let mut v: Vec<Point> = (0..10).map(|i| [i as f64, 0.0]).collect();
        v[3] = v[2];
        assert!(Curve::new(v, false).is_err());
    }

    #[test]
    fn circumference_and_area() {
        let c = Curve::regular_polygon([0.0, 0.0], 1.0, 256, 0.0).unwrap();
        let s = c.sample();
        assert!((s.total_weight() - TAU).abs() < 1e-3);
        assert!((c.area() - PI).abs() < 1e-3);
        assert!(c.signed_area() > 0.0);
        assert!((c.isoperimetric_ratio() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn figure_eight_not_simple() {
        let v: Vec<Point> = (0..40)
            .map(|k| {
                let t = TAU * k as f64 / 40.0;
                [t.sin(), (2.0 * t).sin() / 2.0]
            })
            .collect();
        assert!(Curve::new(v.clone(), true).is_err());
        assert!(!Curve::new_unchecked_simplicity(v, true).unwrap().is_simple());
        assert!(Curve::regular_polygon([0.0, 0.0], 1.0, 100, 0.0).unwrap().is_simple());
    }

    #[test]
    fn clipped_length() {
        let c = Curve::regular_polygon([0.0, 0.0], 1.0, 2048, 0.0).unwrap();
        // arc of the unit circle inside B((1,0), r): angle 2·2asin(r/2)
        let r: f64 = 0.5;
        let want = 4.0 * (r / 2.0).asin();
        assert!((c.length_in_ball([1.0, 0.0], r) - want).abs() < 1e-4);
        assert_eq!(segment_length_in_ball([0.0, 0.0], [1.0, 0.0], [0.5, 2.0], 1.0), 0.0);
        assert!((segment_length_in_ball([-2.0, 0.0], [2.0, 0.0], [0.0, 0.0], 1.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let c = Curve::regular_polygon([0.0, 0.0], 1.0, 16, 0.2).unwrap().with_time(0.125);
        let s = Surface::Curve(c);
        let text = s.to_json();
        assert_eq!(Surface::from_json(&text).unwrap(), s);
        assert!(Surface::from_json(&text.replace("\"closed\"", "\"closd\"")).is_err());
    }

    proptest! {
        #[test]
        fn star_polygons_are_simple(radii in proptest::collection::vec(0.5..2.0f64, 8..40)) {
            let m = radii.len();
            let v: Vec<Point> = radii
                .iter()
                .enumerate()
                .map(|(k, r)| {
                    let a = TAU * k as f64 / m as f64;
                    [r * a.cos(), r * a.sin()]
                })
                .collect();
            let c = Curve::new_unchecked_simplicity(v, true).unwrap();
            prop_assert!(c.is_simple());
            prop_assert!(c.signed_area() > 0.0);
        }
    }
}
