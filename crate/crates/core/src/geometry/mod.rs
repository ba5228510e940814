//! Discrete surfaces and the differential geometry of graphs.

mod curve;
mod cylinder;
mod graph;
mod patch;
mod sample;

pub use curve::{Curve, CurveFrame};
pub(crate) use curve::segment_length_in_ball;
pub use cylinder::Cylinder;
pub use graph::{
    curvature_sandwich_constants, graph_normal, mean_curvature_graph, second_fundamental_norm,
    second_fundamental_norm_sq, tilt, SymMatrix,
};
pub use patch::{GraphPatch, PatchDomain};
pub use sample::{SampleBoundary, SurfaceSample};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A discrete surface: a sampled graph over a ball or box, or a polyline.
#[derive(Clone, Debug, PartialEq)]
pub enum Surface {
    Graph(GraphPatch),
    Curve(Curve),
}

impl Surface {
    pub fn time(&self) -> f64 {
        match self {
            Surface::Graph(p) => p.time(),
            Surface::Curve(c) => c.time(),
        }
    }

    pub fn set_time(&mut self, t: f64) {
        match self {
            Surface::Graph(p) => p.set_time(t),
            Surface::Curve(c) => c.set_time(t),
        }
    }

    /// Intrinsic dimension `n` of the surface.
    pub fn dim(&self) -> usize {
        match self {
            Surface::Graph(p) => p.dim(),
            Surface::Curve(_) => 1,
        }
    }

    pub fn sample(&self) -> SurfaceSample {
        match self {
            Surface::Graph(p) => p.sample(),
            Surface::Curve(c) => c.sample(),
        }
    }

    /// Grid spacing of a patch, mean edge length of a curve.
    pub fn native_resolution(&self) -> f64 {
        match self {
            Surface::Graph(p) => p.spacing(),
            Surface::Curve(c) => c.length() / c.edge_count() as f64,
        }
    }

    pub fn as_graph(&self) -> Option<&GraphPatch> {
        match self {
            Surface::Graph(p) => Some(p),
            Surface::Curve(_) => None,
        }
    }

    pub fn as_curve(&self) -> Option<&Curve> {
        match self {
            Surface::Curve(c) => Some(c),
            Surface::Graph(_) => None,
        }
    }

    /// Canonical JSON form (the snapshot format).
    pub fn to_json(&self) -> String {
        let doc = match self {
            Surface::Graph(p) => SurfaceDoc::GraphPatch(p.to_doc()),
            Surface::Curve(c) => SurfaceDoc::Curve(c.to_doc()),
        };
        serde_json::to_string(&doc).expect("surface documents always serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SurfaceDoc = serde_json::from_str(text)
            .map_err(|e| Error::invalid("surface json", e.to_string()))?;
        match doc {
            SurfaceDoc::GraphPatch(d) => GraphPatch::from_doc(d).map(Surface::Graph),
            SurfaceDoc::Curve(d) => Curve::from_doc(d).map(Surface::Curve),
        }
    }
}

pub(crate) const SURFACE_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SurfaceDoc {
    GraphPatch(patch::PatchDoc),
    Curve(curve::CurveDoc),
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
