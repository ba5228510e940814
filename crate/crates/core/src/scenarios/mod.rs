//! Scenario runners: initial data, flow, monitors and the pass/fail
//! assertions of each experiment, plus parameter sweeps.

pub mod calibration;
mod curves;
mod graphs;
pub mod initial;
pub mod monitors;
mod spec;
mod sweep;

pub use spec::{
    FlowOverrides, MonitorSettings, ScenarioParams, ScenarioSpec, Verdict, MONITOR_IDS,
    SPEC_VERSION,
};
pub use curves::square_envelope;
pub use sweep::{sweep_csv, GridPoint, SweepRow, SweepSpec};

use std::collections::BTreeMap;

use crate::flow::{run_flow, EndReason, FlowConfig, FlowState, FlowTrace, RemeshPolicy, TimeStep};
use crate::geometry::Surface;
use crate::Result;

use monitors::Anchor;

/// Default CFL factor of scenario runs.
pub const DEFAULT_CFL: f64 = 0.2;

/// One evolved surface of a scenario; families have several.
#[derive(Clone, Debug)]
pub struct MemberRun {
    pub label: String,
    pub trace: FlowTrace,
}

#[derive(Clone, Debug)]
pub struct ScenarioOutcome {
    pub verdict: Verdict,
    pub members: Vec<MemberRun>,
    /// The member whose snapshots represent the run (the worst one for
    /// families).
    pub primary: usize,
}

/// Validates `spec` and runs its scenario.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<ScenarioOutcome> {
    spec.validate()?;
    match &spec.params {
        ScenarioParams::Plane { .. } => graphs::plane(spec),
        ScenarioParams::Circle { .. } => curves::circle(spec),
        ScenarioParams::StayGraphical { .. } => graphs::stay_graphical(spec),
        ScenarioParams::FlatStayGraphical { .. } => graphs::flat_stay_graphical(spec),
        ScenarioParams::ShrinkingSquare { .. } => curves::shrinking_square(spec),
        ScenarioParams::BecomeGraphical { .. } => curves::become_graphical(spec),
        ScenarioParams::BoundedCurvature { .. } => graphs::bounded_curvature(spec),
    }
}

/// Integrator settings with the spec's overrides applied.
fn flow_config(spec: &ScenarioSpec, end: f64, interval: Option<f64>, stride: u64, remesh: RemeshPolicy) -> FlowConfig {
    let mut cfg = FlowConfig::new(TimeStep::Cfl(spec.flow.cfl.unwrap_or(DEFAULT_CFL)), end);
    cfg.record_stride = spec.flow.record_stride.unwrap_or(stride);
    cfg.record_interval = spec.flow.record_interval.or(interval);
    cfg.remesh = remesh;
    cfg
}

/// Runs one member with the scenario's monitor battery.
fn evolve(spec: &ScenarioSpec, surface: Surface, anchor: &Anchor, cfg: &FlowConfig) -> Result<FlowTrace> {
    let mut mons = monitors::build(spec, &surface, anchor)?;
    run_flow(FlowState::new(surface), cfg, &mut mons)
}

const MAX_LISTED: usize = 20;

/// Monitor failures and abnormal ends of `trace` become verdict failures;
/// per-monitor minimum margins are folded into `margins`.
fn audit(v: &mut Verdict, label: &str, trace: &FlowTrace, margins: &mut BTreeMap<String, f64>) {
    let mut count = 0usize;
    for r in trace.violations() {
        count += 1;
        if v.failures.len() < MAX_LISTED {
            v.failures.push(format!(
                "{label}: monitor {} violated at t = {}: value {} exceeds bound {}",
                r.monitor, r.t, r.value, r.bound
            ));
        }
        v.pass = false;
    }
    for r in trace.reports().filter(|r| r.enforced && r.skipped.is_none()) {
        let m = margins.entry(r.monitor.clone()).or_insert(f64::INFINITY);
        *m = m.min(r.margin);
    }
    *v.measured.entry("monitor_violations".into()).or_insert(0.0) += count as f64;
    match trace.end {
        EndReason::EndTime | EndReason::Extinction => {}
        end => v.assert(false, || format!("{label}: flow ended early ({end:?})")),
    }
}

fn finish_margins(v: &mut Verdict, margins: BTreeMap<String, f64>) {
    for (id, m) in margins {
        if m.is_finite() {
            v.measure(&format!("min_margin.{id}"), m);
        }
    }
}

/// Single-member outcome with the monitor audit applied.
fn single(mut v: Verdict, label: &str, trace: FlowTrace) -> ScenarioOutcome {
    let mut margins = BTreeMap::new();
    audit(&mut v, label, &trace, &mut margins);
    finish_margins(&mut v, margins);
    ScenarioOutcome {
        verdict: v,
        members: vec![MemberRun {
            label: label.to_string(),
            trace,
        }],
        primary: 0,
    }
}
