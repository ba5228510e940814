use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// `C(a, r, h) = B^n(â, r) × B^1(ã, h)` with open balls; `a = (â, ã)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    center: Vec<f64>,
    radius: f64,
    height: f64,
}

impl Cylinder {
    pub fn new(center: Vec<f64>, radius: f64, height: f64) -> Result<Self> {
        if center.len() < 2 {
            return Err(Error::invalid("cylinder", "center needs n + 1 >= 2 coordinates"));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("cylinder", "non-finite center"));
        }
        if !(radius >= 0.0 && radius.is_finite()) || !(height >= 0.0 && height.is_finite()) {
            return Err(Error::invalid(
                "cylinder",
                format!("radius {radius} and height {height} must be finite and >= 0"),
            ));
        }
        Ok(Self {
            center,
            radius,
            height,
        })
    }

    /// `C(0, r, h)` in `R^{n+1}`.
    pub fn centered(n: usize, radius: f64, height: f64) -> Result<Self> {
        Self::new(vec![0.0; n + 1], radius, height)
    }

    pub fn dim(&self) -> usize {
        self.center.len() - 1
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Horizontal part `â`.
    pub fn base(&self) -> &[f64] {
        &self.center[..self.dim()]
    }

    /// Vertical part `ã`.
    pub fn level(&self) -> f64 {
        self.center[self.dim()]
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn is_empty(&self) -> bool {
        self.radius == 0.0 || self.height == 0.0
    }

    pub fn with_radius(&self, radius: f64) -> Self {
        Self {
            radius,
            ..self.clone()
        }
    }

    pub fn contains_base(&self, xhat: &[f64]) -> bool {
        super::dist_sq(xhat, self.base()) < self.radius * self.radius
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let n = self.dim();
        self.contains_base(&p[..n]) && (p[n] - self.level()).abs() < self.height
    }
}
