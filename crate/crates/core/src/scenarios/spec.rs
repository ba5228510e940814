//! Versioned scenario documents and their validation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::monitors::{DENSITY_D0, TOL_IDENTITY, TOL_MONO};
use crate::{Error, Result};

pub const SPEC_VERSION: u32 = 1;

/// One experiment: which scenario, its parameters, and how to run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub version: u32,
    pub seed: u64,
    /// Grid nodes across the base diameter for graphs; vertex count for
    /// closed curves; `4/resolution` is the coarse edge length of open
    /// curves.
    pub resolution: usize,
    pub params: ScenarioParams,
    #[serde(default)]
    pub monitors: MonitorSettings,
    #[serde(default)]
    pub flow: FlowOverrides,
    /// Default run directory, relative to the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioParams {
    /// Stationary affine graph.
    Plane {
        #[serde(default = "one")]
        dimension: usize,
        #[serde(default)]
        slope: f64,
        #[serde(default = "default_window")]
        window: f64,
    },
    /// Round circle under curve shortening flow.
    Circle {
        #[serde(default = "one_f")]
        radius: f64,
    },
    /// Random Lipschitz graphs over `B^n(0,2)`; measures `κ̂(L)`.
    StayGraphical {
        lipschitz: f64,
        #[serde(default = "one")]
        dimension: usize,
        #[serde(default = "default_family")]
        family_size: usize,
        #[serde(default = "default_window")]
        window: f64,
    },
    /// Small-gradient data with the three decay bounds.
    FlatStayGraphical {
        l: f64,
        #[serde(default = "one")]
        dimension: usize,
        #[serde(default = "default_flat_c")]
        c_hat: f64,
        #[serde(default = "default_window")]
        window: f64,
    },
    /// Rounded square with the comparison circles.
    ShrinkingSquare { epsilon: f64 },
    /// A Lipschitz graph in a thin slab with an S-shaped fold over a gap.
    BecomeGraphical {
        lipschitz: f64,
        gamma: f64,
        epsilon: f64,
        #[serde(default = "default_gap")]
        gap_width: f64,
        #[serde(default = "default_hold")]
        hold: usize,
        #[serde(default = "default_become_c")]
        c_hat: f64,
    },
    /// Steep ramp with bounded curvature.
    BoundedCurvature {
        #[serde(default = "default_k")]
        k: f64,
        #[serde(default = "default_kappa_tilt")]
        kappa_tilt: f64,
        #[serde(default = "default_ramp")]
        lipschitz: f64,
        #[serde(default = "default_window")]
        window: f64,
        #[serde(default = "default_bounded_c")]
        c_hat: f64,
    },
}

fn one() -> usize {
    1
}
fn one_f() -> f64 {
    1.0
}
fn default_window() -> f64 {
    0.1
}
fn default_family() -> usize {
    20
}
fn default_gap() -> f64 {
    0.05
}
fn default_hold() -> usize {
    10
}
fn default_k() -> f64 {
    5.0
}
fn default_kappa_tilt() -> f64 {
    0.1
}
fn default_ramp() -> f64 {
    2.0
}
fn default_flat_c() -> f64 {
    10.0
}
fn default_become_c() -> f64 {
    super::calibration::BECOME_C_HAT
}
fn default_bounded_c() -> f64 {
    super::calibration::BOUNDED_C_HAT
}

impl ScenarioParams {
    pub fn id(&self) -> &'static str {
        match self {
            ScenarioParams::Plane { .. } => "plane",
            ScenarioParams::Circle { .. } => "circle",
            ScenarioParams::StayGraphical { .. } => "stay_graphical",
            ScenarioParams::FlatStayGraphical { .. } => "flat_stay_graphical",
            ScenarioParams::ShrinkingSquare { .. } => "shrinking_square",
            ScenarioParams::BecomeGraphical { .. } => "become_graphical",
            ScenarioParams::BoundedCurvature { .. } => "bounded_curvature",
        }
    }
}

/// Which monitors run and with which constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSettings {
    /// Monitor ids; `None` selects the scenario's default set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<Vec<String>>,
    #[serde(default = "default_tol_mono")]
    pub tol_mono: f64,
    #[serde(default = "default_d0")]
    pub d0: f64,
    #[serde(default = "default_tau")]
    pub density_tau: f64,
    #[serde(default = "default_c_height")]
    pub c_height: f64,
    #[serde(default = "default_c_curv")]
    pub c_curvature: f64,
    #[serde(default = "default_tol_id")]
    pub tol_identity: f64,
}

fn default_tol_mono() -> f64 {
    TOL_MONO
}
fn default_d0() -> f64 {
    DENSITY_D0
}
fn default_tau() -> f64 {
    0.01
}
fn default_c_height() -> f64 {
    super::calibration::HEIGHT_C_HAT
}
fn default_c_curv() -> f64 {
    super::calibration::CURVATURE_C_HAT
}
fn default_tol_id() -> f64 {
    TOL_IDENTITY
}

impl Default for MonitorSettings {
    fn default() -> Self {
        Self {
            enabled: None,
            tol_mono: default_tol_mono(),
            d0: default_d0(),
            density_tau: default_tau(),
            c_height: default_c_height(),
            c_curvature: default_c_curv(),
            tol_identity: default_tol_id(),
        }
    }
}

/// Every monitor id a spec may name.
pub const MONITOR_IDS: [&str; 10] = [
    "phi", "ups_const", "ups_slab", "ups_split", "measure", "height", "grad_eh", "curv_eh",
    "density", "brakke",
];

/// Overrides of the scenario's integrator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct FlowOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cfl: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
}

fn check(ok: bool, field: &str, reason: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(field, reason))
    }
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

impl ScenarioSpec {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ScenarioSpec =
            serde_json::from_str(text).map_err(|e| Error::config("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Canonical serialization: pretty JSON with a trailing newline.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("specs serialize");
        s.push('\n');
        s
    }

    pub fn validate(&self) -> Result<()> {
        check(self.version == SPEC_VERSION, "version", "unsupported spec version, expected 1")?;
        check(
            (8..=4096).contains(&self.resolution),
            "resolution",
            "must lie in [8, 4096]",
        )?;
        match self.params {
            ScenarioParams::Plane { dimension, slope, window } => {
                check(matches!(dimension, 1 | 2), "params.dimension", "must be 1 or 2")?;
                check(slope.is_finite() && slope.abs() <= 10.0, "params.slope", "must be finite with |slope| <= 10")?;
                check(window >= 0.0 && window.is_finite(), "params.window", "must be >= 0")?;
            }
            ScenarioParams::Circle { radius } => {
                check(positive(radius), "params.radius", "must be > 0")?;
            }
            ScenarioParams::StayGraphical { lipschitz, dimension, family_size, window } => {
                check((0.0..=4.0).contains(&lipschitz), "params.lipschitz", "must lie in [0, 4]")?;
                check(matches!(dimension, 1 | 2), "params.dimension", "must be 1 or 2")?;
                check(family_size >= 1, "params.family_size", "must be positive")?;
                check(positive(window), "params.window", "must be > 0")?;
            }
            ScenarioParams::FlatStayGraphical { l, dimension, c_hat, window } => {
                check((0.0..=0.1).contains(&l), "params.l", "must lie in [0, 0.1]")?;
                check(matches!(dimension, 1 | 2), "params.dimension", "must be 1 or 2")?;
                check(c_hat >= 0.0 && c_hat.is_finite(), "params.c_hat", "must be >= 0")?;
                check(positive(window), "params.window", "must be > 0")?;
            }
            ScenarioParams::ShrinkingSquare { epsilon } => {
                check(epsilon > 0.0 && epsilon < 0.25, "params.epsilon", "must lie in (0, 1/4)")?;
            }
            ScenarioParams::BecomeGraphical { lipschitz, gamma, epsilon, gap_width, hold, c_hat } => {
                check((0.0..=4.0).contains(&lipschitz), "params.lipschitz", "must lie in [0, 4]")?;
                check(gamma > 0.0 && gamma <= 0.1, "params.gamma", "must lie in (0, 0.1]")?;
                check(positive(epsilon) && epsilon <= 1.0, "params.epsilon", "must lie in (0, 1]")?;
                check((0.0..1.0).contains(&gap_width), "params.gap_width", "must lie in [0, 1)")?;
                check(hold >= 1, "params.hold", "must be positive")?;
                check(c_hat >= 0.0 && c_hat.is_finite(), "params.c_hat", "must be >= 0")?;
            }
            ScenarioParams::BoundedCurvature { k, kappa_tilt, lipschitz, window, c_hat } => {
                check(positive(k), "params.k", "must be > 0")?;
                check(kappa_tilt > 0.0 && kappa_tilt < 0.5, "params.kappa_tilt", "must lie in (0, 1/2)")?;
                check(positive(lipschitz) && lipschitz <= 4.0, "params.lipschitz", "must lie in (0, 4]")?;
                check(positive(window), "params.window", "must be > 0")?;
                check(c_hat >= 0.0 && c_hat.is_finite(), "params.c_hat", "must be >= 0")?;
            }
        }
        let m = &self.monitors;
        if let Some(ids) = &m.enabled {
            for (i, id) in ids.iter().enumerate() {
                check(
                    MONITOR_IDS.contains(&id.as_str()),
                    &format!("monitors.enabled[{i}]"),
                    "unknown monitor id",
                )?;
            }
        }
        check(m.tol_mono >= 0.0 && m.tol_mono.is_finite(), "monitors.tol_mono", "must be >= 0")?;
        check(positive(m.d0), "monitors.d0", "must be > 0")?;
        check(positive(m.density_tau), "monitors.density_tau", "must be > 0")?;
        check(m.c_height >= 0.0 && m.c_height.is_finite(), "monitors.c_height", "must be >= 0")?;
        check(positive(m.c_curvature), "monitors.c_curvature", "must be > 0")?;
        check(positive(m.tol_identity), "monitors.tol_identity", "must be > 0")?;
        let f = &self.flow;
        if let Some(l) = f.cfl {
            check(l > 0.0 && l <= crate::flow::MAX_CFL, "flow.cfl", "must lie in (0, 0.25]")?;
        }
        if let Some(s) = f.record_stride {
            check(s > 0, "flow.record_stride", "must be positive")?;
        }
        if let Some(iv) = f.record_interval {
            check(positive(iv), "flow.record_interval", "must be > 0")?;
        }
        Ok(())
    }

    /// Whether monitor `id` runs, given the scenario's defaults.
    pub fn monitor_enabled(&self, id: &str, defaults: &[&str]) -> bool {
        match &self.monitors.enabled {
            Some(ids) => ids.iter().any(|s| s == id),
            None => defaults.contains(&id),
        }
    }
}

/// Machine-readable outcome of a scenario run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Verdict {
    pub scenario: String,
    pub pass: bool,
    pub measured: BTreeMap<String, f64>,
    pub failures: Vec<String>,
}

impl Verdict {
    pub fn new(scenario: &str) -> Self {
        Self {
            scenario: scenario.to_string(),
            pass: true,
            measured: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    pub fn measure(&mut self, key: &str, value: f64) {
        self.measured.insert(key.to_string(), value);
    }

    /// Records an assertion; a false `ok` fails the verdict.
    pub fn assert(&mut self, ok: bool, message: impl FnOnce() -> String) {
        if !ok {
            self.pass = false;
            self.failures.push(message());
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(params: &str) -> String {
        format!(r#"{{"version":1,"seed":3,"resolution":64,"params":{params}}}"#)
    }

    fn field_of(text: &str) -> String {
        match ScenarioSpec::from_json(text) {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn defaults_fill_in() {
        let s = ScenarioSpec::from_json(&spec(r#"{"scenario":"plane"}"#)).unwrap();
        assert_eq!(s.params, ScenarioParams::Plane { dimension: 1, slope: 0.0, window: 0.1 });
        assert_eq!(s.monitors, MonitorSettings::default());
        assert_eq!(s.flow, FlowOverrides::default());
        assert!(s.monitor_enabled("phi", &["phi"]));
        assert!(!s.monitor_enabled("brakke", &["phi"]));
    }

    #[test]
    fn validation_names_the_field() {
        assert_eq!(field_of(&spec(r#"{"scenario":"circle","radius":-1}"#)), "params.radius");
        assert_eq!(field_of(&spec(r#"{"scenario":"shrinking_square","epsilon":0.3}"#)), "params.epsilon");
        assert_eq!(field_of(&spec(r#"{"scenario":"flat_stay_graphical","l":0.2}"#)), "params.l");
        assert_eq!(
            field_of(r#"{"version":2,"seed":0,"resolution":64,"params":{"scenario":"plane"}}"#),
            "version"
        );
        assert_eq!(
            field_of(r#"{"version":1,"seed":0,"resolution":64,"params":{"scenario":"plane"},"monitors":{"enabled":["phi","nope"]}}"#),
            "monitors.enabled[1]"
        );
        assert_eq!(
            field_of(r#"{"version":1,"seed":0,"resolution":64,"params":{"scenario":"plane"},"flow":{"cfl":0.5}}"#),
            "flow.cfl"
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ScenarioSpec::from_json(&spec(r#"{"scenario":"plane","slop":1}"#)).unwrap_err();
        assert!(e.to_string().contains("slop"), "{e}");
        assert!(ScenarioSpec::from_json(&spec(r#"{"scenario":"torus"}"#)).is_err());
    }

    #[test]
    fn canonical_form_round_trips() {
        let s = ScenarioSpec::from_json(&spec(r#"{"scenario":"become_graphical","lipschitz":1,"gamma":0.02,"epsilon":0.05}"#)).unwrap();
        let text = s.to_canonical_json();
        let back = ScenarioSpec::from_json(&text).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.to_canonical_json(), text);
    }

    #[test]
    fn verdict_collects_failures() {
        let mut v = Verdict::new("x");
        v.assert(true, || unreachable!());
        assert!(v.pass);
        v.assert(false, || "bad".into());
        assert!(!v.pass);
        assert_eq!(v.failures, vec!["bad".to_string()]);
    }
}
