use serde::{Deserialize, Serialize};

use crate::geometry::{Surface, SurfaceSample};

/// Outcome of one inequality check at one recorded time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub monitor: String,
    pub t: f64,
    pub value: f64,
    pub bound: f64,
    /// `bound − value`.
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    /// Set when the check was not applicable; such reports always pass.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    /// Informational monitors report but never fail a run.
    pub enforced: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl MonitorReport {
    pub fn check(monitor: &str, t: f64, value: f64, bound: f64, tol: f64) -> Self {
        let margin = bound - value;
        Self {
            monitor: monitor.to_string(),
            t,
            value,
            bound,
            margin,
            tol,
            pass: margin >= -tol,
            skipped: None,
            enforced: true,
            note: None,
        }
    }

    pub fn skipped(monitor: &str, t: f64, reason: impl Into<String>) -> Self {
        Self {
            monitor: monitor.to_string(),
            t,
            value: f64::NAN,
            bound: f64::NAN,
            margin: f64::NAN,
            tol: 0.0,
            pass: true,
            skipped: Some(reason.into()),
            enforced: true,
            note: None,
        }
    }

    pub fn informational(mut self) -> Self {
        self.enforced = false;
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// A failure that should fail the run.
    pub fn is_violation(&self) -> bool {
        self.enforced && !self.pass
    }
}

/// What a monitor sees at a recorded step.
pub struct Observation<'a> {
    pub step: u64,
    pub t: f64,
    pub surface: &'a Surface,
    pub sample: &'a SurfaceSample,
}

/// A per-record check. Monitors are called in record order and may keep
/// state (the initial surface, the previous integral, ...).
pub trait Monitor: Send {
    fn id(&self) -> &str;

    fn observe(&mut self, obs: &Observation<'_>) -> MonitorReport;

    /// Asks the driver to end the flow after this record.
    fn wants_stop(&self) -> bool {
        false
    }
}
