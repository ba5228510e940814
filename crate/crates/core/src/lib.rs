//! Discrete mean curvature flow of graphical hypersurfaces and closed plane
//! curves, together with runtime monitors for the local regularity estimates
//! of the flow (monotonicity of localized test functions, Gaussian density
//! ratios, Ecker–Huisken gradient and curvature bounds) and a probe-based
//! graphicality predicate.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: sampled graphs, polylines, cylinders and the differential
//!   geometry of graphs (normal, tilt, second fundamental form, mean curvature).
//! * [`flow`]: explicit integrators for graph MCF and curve shortening flow,
//!   and the [`flow::run_flow`] driver producing a [`flow::FlowTrace`].
//! * [`monitors`]: test functions, heat kernel and per-record inequality checks.
//! * [`graphicality`]: vertical-probe graphicality, sheet counting and graph
//!   extraction.
//! * [`scenarios`]: executable experiments with pass/fail verdicts.

pub mod error;
pub mod flow;
pub mod fmt;
pub mod geometry;
pub mod graphicality;
pub mod monitors;
pub mod scenarios;

pub use error::{Error, Result};
