/// Where a sampled surface stops, as far as integrals over it are concerned.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum SampleBoundary {
    /// Closed surface: the sample is complete.
    #[default]
    None,
    /// Graph over the ball `B^n(center, radius)`: the sample covers the
    /// vertical cylinder over it.
    Cylinder { center: Vec<f64>, radius: f64 },
    /// Boundary points of an open curve.
    Points(Vec<Vec<f64>>),
}

impl SampleBoundary {
    /// Distance from `x` (ambient) to the edge of the sampled region.
    pub fn clearance(&self, x: &[f64]) -> f64 {
        match self {
            SampleBoundary::None => f64::INFINITY,
            SampleBoundary::Cylinder { center, radius } => {
                radius - super::dist_sq(&x[..center.len()], center).sqrt()
            }
            SampleBoundary::Points(pts) => pts
                .iter()
                .map(|p| super::dist_sq(p, x).sqrt())
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// Point cloud with normals, curvature and area weights: the discrete
/// stand-in for the measure `μ_t` on a surface.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SurfaceSample {
    /// Ambient dimension `n + 1`.
    pub ambient_dim: usize,
    pub points: Vec<Vec<f64>>,
    pub normals: Vec<Vec<f64>>,
    /// `|A|` at each point.
    pub curvature: Vec<f64>,
    /// Scalar mean curvature along the stored normal.
    pub mean_curvature: Vec<f64>,
    pub weights: Vec<f64>,
    pub boundary: SampleBoundary,
}

impl SurfaceSample {
    pub fn with_capacity(ambient_dim: usize, cap: usize) -> Self {
        Self {
            ambient_dim,
            points: Vec::with_capacity(cap),
            normals: Vec::with_capacity(cap),
            curvature: Vec::with_capacity(cap),
            mean_curvature: Vec::with_capacity(cap),
            weights: Vec::with_capacity(cap),
            boundary: SampleBoundary::None,
        }
    }

    pub(crate) fn push(&mut self, p: Vec<f64>, normal: Vec<f64>, a: f64, h: f64, w: f64) {
        self.points.push(p);
        self.normals.push(normal);
        self.curvature.push(a);
        self.mean_curvature.push(h);
        self.weights.push(w);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `Σ w φ(x)` over the sample.
    pub fn integrate(&self, phi: impl Fn(&[f64]) -> f64) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * phi(p))
            .sum()
    }

    pub fn max_curvature(&self) -> f64 {
        self.curvature.iter().copied().fold(0.0, f64::max)
    }
}
