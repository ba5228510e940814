//! Time integration of mean curvature flow and the recording driver.

mod curve;
mod graph;

pub use curve::{maybe_remesh, remesh_uniform, step_csf, RemeshCause, RemeshPolicy, COLLAPSE_EDGE};
pub use graph::{step_graph_mcf, MAX_CFL};

use serde::{Deserialize, Serialize};

use crate::geometry::{Surface, SurfaceSample};
use crate::monitors::{Monitor, MonitorReport, Observation};
use crate::{Error, Result};

use graph::GraphStepper;

/// How the time step is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeStep {
    /// Constant step, rejected once it exceeds the stability bound.
    Fixed(f64),
    /// `λ h²/(1+max|Df|²)` for graphs, `λ (min edge)²` for curves.
    Cfl(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryCondition {
    /// Active nodes without a full interior stencil keep their values.
    #[default]
    DirichletFrozen,
    /// Each axis wraps with period `2·radius`; the last node layer mirrors
    /// the first.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub time_step: TimeStep,
    pub end_time: f64,
    #[serde(default)]
    pub boundary: BoundaryCondition,
    /// Record every this many steps.
    pub record_stride: u64,
    /// Also record at every multiple of this time; steps are shortened to
    /// land on those times exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_interval: Option<f64>,
    #[serde(default)]
    pub remesh: RemeshPolicy,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_max_steps() -> u64 {
    20_000_000
}

impl FlowConfig {
    pub fn new(time_step: TimeStep, end_time: f64) -> Self {
        Self {
            time_step,
            end_time,
            boundary: BoundaryCondition::default(),
            record_stride: 100,
            record_interval: None,
            remesh: RemeshPolicy::default(),
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.time_step {
            TimeStep::Cfl(l) if !(l > 0.0 && l <= MAX_CFL) => {
                return Err(Error::config("flow.time_step.cfl", "must lie in (0, 0.25]"));
            }
            TimeStep::Fixed(dt) if !(dt > 0.0 && dt.is_finite()) => {
                return Err(Error::config("flow.time_step.fixed", "must be finite and > 0"));
            }
            _ => {}
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return Err(Error::config("flow.end_time", "must be finite and >= 0"));
        }
        if self.record_stride == 0 {
            return Err(Error::config("flow.record_stride", "must be positive"));
        }
        if let Some(dt) = self.record_interval {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::config("flow.record_interval", "must be finite and > 0"));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::config("flow.max_steps", "must be positive"));
        }
        self.remesh.validate("flow.remesh")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub surface: Surface,
    pub step: u64,
    pub t: f64,
}

impl FlowState {
    pub fn new(surface: Surface) -> Self {
        let t = surface.time();
        Self {
            surface,
            step: 0,
            t,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Extinction,
    BlowUp,
    Remesh,
    EdgeCollapse,
    NonSimple,
    MonitorFailure,
    MonitorStop,
    StepRejected,
    StepBudget,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub step: u64,
    pub t: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// Why the driver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    EndTime,
    Extinction,
    BlowUp,
    MonitorStop,
    StepRejected,
    StepBudget,
}

/// Summary quantities stored with every record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecordStats {
    /// `H^n` measure of the whole surface.
    pub measure: f64,
    /// Enclosed area of a closed curve.
    pub area: Option<f64>,
    /// `max |Df|` of a graph.
    pub max_grad: Option<f64>,
    pub max_curv: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub step: u64,
    pub t: f64,
    pub surface: Surface,
    pub stats: RecordStats,
    pub reports: Vec<MonitorReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowTrace {
    pub records: Vec<Record>,
    pub events: Vec<Event>,
    pub end: EndReason,
    pub steps: u64,
    /// Set once a record fails the simplicity check.
    pub non_simple: bool,
}

impl FlowTrace {
    pub fn final_record(&self) -> &Record {
        self.records.last().expect("a trace always holds its initial record")
    }

    pub fn extinction_time(&self) -> Option<f64> {
        self.events
            .iter()
            .find(|e| e.kind == EventKind::Extinction)
            .map(|e| e.t)
    }

    pub fn reports(&self) -> impl Iterator<Item = &MonitorReport> {
        self.records.iter().flat_map(|r| r.reports.iter())
    }

    pub fn violations(&self) -> impl Iterator<Item = &MonitorReport> {
        self.reports().filter(|r| r.is_violation())
    }

    pub fn times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.t).collect()
    }
}

fn stats(surface: &Surface, sample: &SurfaceSample) -> RecordStats {
    RecordStats {
        measure: sample.total_weight(),
        area: surface.as_curve().filter(|c| c.is_closed()).map(|c| c.area()),
        max_grad: surface.as_graph().map(|p| p.max_gradient()),
        max_curv: sample.max_curvature(),
    }
}

struct Driver<'m> {
    monitors: &'m mut [Box<dyn Monitor>],
    trace: FlowTrace,
    remeshes_since_record: u64,
}

impl Driver<'_> {
    /// Records the state; returns true when a monitor asks to stop.
    fn record(&mut self, state: &FlowState) -> bool {
        let sample = state.surface.sample();
        let obs = Observation {
            step: state.step,
            t: state.t,
            surface: &state.surface,
            sample: &sample,
        };
        let reports: Vec<MonitorReport> = self.monitors.iter_mut().map(|m| m.observe(&obs)).collect();
        if self.remeshes_since_record > 0 {
            self.event(state, EventKind::Remesh, format!("{} remeshes since previous record", self.remeshes_since_record));
            self.remeshes_since_record = 0;
        }
        for r in reports.iter().filter(|r| r.is_violation()) {
            let detail = format!("{}: value {} bound {} margin {}", r.monitor, r.value, r.bound, r.margin);
            self.event(state, EventKind::MonitorFailure, detail);
        }
        if let Some(c) = state.surface.as_curve() {
            if !self.trace.non_simple && !c.is_simple() {
                self.trace.non_simple = true;
                self.event(state, EventKind::NonSimple, "self-intersection detected".into());
            }
        }
        self.trace.records.push(Record {
            step: state.step,
            t: state.t,
            stats: stats(&state.surface, &sample),
            surface: state.surface.clone(),
            reports,
        });
        self.monitors.iter().any(|m| m.wants_stop())
    }

    fn event(&mut self, state: &FlowState, kind: EventKind, detail: String) {
        self.trace.events.push(Event {
            step: state.step,
            t: state.t,
            kind,
            detail,
        });
    }
}

/// Evolves `initial` until `config.end_time`, extinction, blow-up or a
/// monitor stop, recording every `record_stride` steps and at the end.
///
/// Step failures become trace events; only an invalid configuration or a
/// surface the solver cannot handle is returned as an error.
pub fn run_flow(
    initial: FlowState,
    config: &FlowConfig,
    monitors: &mut [Box<dyn Monitor>],
) -> Result<FlowTrace> {
    config.validate()?;
    let stepper = match &initial.surface {
        Surface::Graph(p) => Some(GraphStepper::new(p, config.boundary)?),
        Surface::Curve(_) => None,
    };
    let (init_min_edge, init_area) = match &initial.surface {
        Surface::Curve(c) => (c.min_edge(), c.area()),
        Surface::Graph(_) => (0.0, 0.0),
    };
    let mut d = Driver {
        monitors,
        trace: FlowTrace {
            records: Vec::new(),
            events: Vec::new(),
            end: EndReason::EndTime,
            steps: 0,
            non_simple: false,
        },
        remeshes_since_record: 0,
    };
    let mut state = initial;
    let t_end = state.t + config.end_time;
    let mut stopped = d.record(&state);
    if stopped {
        d.event(&state, EventKind::MonitorStop, "stop requested at initial record".into());
        d.trace.end = EndReason::MonitorStop;
    }
    let mut velocity = match &state.surface {
        Surface::Graph(p) => vec![0.0; p.node_count()],
        Surface::Curve(_) => Vec::new(),
    };
    let t0 = state.t;
    let mark_at = |k: u64| config.record_interval.map(|iv| t0 + k as f64 * iv);
    let mut mark_k = 1u64;
    let mut last_recorded = true;
    while !stopped && state.t < t_end {
        if d.trace.steps >= config.max_steps {
            d.event(&state, EventKind::StepBudget, format!("{} steps", config.max_steps));
            d.trace.end = EndReason::StepBudget;
            break;
        }
        // Stability bound at the current state.
        let (limit, graph_g2) = match (&state.surface, &stepper) {
            (Surface::Graph(p), Some(s)) => {
                let g2 = s.velocity(p.values(), &mut velocity);
                let lam = match config.time_step {
                    TimeStep::Cfl(l) => l,
                    TimeStep::Fixed(_) => MAX_CFL,
                };
                (s.cfl_limit(lam, g2), g2)
            }
            (Surface::Curve(c), _) => {
                let lam = match config.time_step {
                    TimeStep::Cfl(l) => l,
                    TimeStep::Fixed(_) => MAX_CFL,
                };
                (curve::cfl_limit(c, lam), 0.0)
            }
            _ => unreachable!("graph surfaces always have a stepper"),
        };
        if !graph_g2.is_finite() || !limit.is_finite() {
            d.event(&state, EventKind::BlowUp, "non-finite gradient".into());
            d.trace.end = EndReason::BlowUp;
            break;
        }
        let mut dt = match config.time_step {
            TimeStep::Cfl(_) => limit,
            TimeStep::Fixed(dt) => {
                if dt > limit {
                    let e = Error::Cfl { dt, limit };
                    d.event(&state, EventKind::StepRejected, e.to_string());
                    d.trace.end = EndReason::StepRejected;
                    break;
                }
                dt
            }
        };
        // Land exactly on the end time and on record marks.
        let mut target = None;
        if state.t + dt >= t_end {
            dt = t_end - state.t;
            target = Some(t_end);
        }
        let mut hit_mark = false;
        if let Some(m) = mark_at(mark_k) {
            if m <= t_end && state.t + dt >= m {
                dt = m - state.t;
                target = Some(m);
                hit_mark = true;
                mark_k += 1;
            }
        }
        if dt <= 0.0 {
            continue;
        }
        let stepped: Result<Surface> = match (&state.surface, &stepper) {
            (Surface::Graph(p), Some(s)) => {
                let mut next = p.clone();
                if s.apply(next.values_mut(), &velocity, dt) {
                    Ok(Surface::Graph(next))
                } else {
                    Err(Error::BlowUp { t: state.t + dt })
                }
            }
            (Surface::Curve(c), _) => curve::advance(c, dt).map(Surface::Curve),
            _ => unreachable!(),
        };
        let surface = match stepped {
            Ok(s) => s,
            Err(e) => {
                d.event(&state, EventKind::BlowUp, e.to_string());
                d.trace.end = EndReason::BlowUp;
                break;
            }
        };
        state.surface = surface;
        state.t = target.unwrap_or(state.t + dt);
        state.surface.set_time(state.t);
        state.step += 1;
        d.trace.steps += 1;
        last_recorded = false;

        if let Surface::Curve(c) = &state.surface {
            match maybe_remesh(c, &config.remesh) {
                Ok(Some((r, cause))) => {
                    if cause == RemeshCause::Collapse {
                        d.event(&state, EventKind::EdgeCollapse, format!("edge shorter than {COLLAPSE_EDGE}"));
                    }
                    state.surface = Surface::Curve(r);
                    d.remeshes_since_record += 1;
                }
                Ok(None) => {}
                Err(e) => {
                    d.event(&state, EventKind::BlowUp, e.to_string());
                    d.trace.end = EndReason::BlowUp;
                    break;
                }
            }
            let c = state.surface.as_curve().expect("still a curve");
            if c.is_closed() {
                let reason = if c.length() < 10.0 * init_min_edge {
                    Some("length below 10 initial minimum edges")
                } else if c.area() < 1e-6 * init_area {
                    Some("area below 1e-6 of initial")
                } else {
                    None
                };
                if let Some(why) = reason {
                    d.event(&state, EventKind::Extinction, why.into());
                    d.trace.end = EndReason::Extinction;
                    d.record(&state);
                    last_recorded = true;
                    break;
                }
            }
        }

        if state.step.is_multiple_of(config.record_stride) || hit_mark || state.t >= t_end {
            last_recorded = true;
            if d.record(&state) {
                d.event(&state, EventKind::MonitorStop, "stop requested by monitor".into());
                d.trace.end = EndReason::MonitorStop;
                stopped = true;
            }
        }
    }
    if !last_recorded {
        d.record(&state);
    }
    Ok(d.trace)
}
