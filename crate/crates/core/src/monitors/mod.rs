//! The test functions, kernels and estimates of local MCF regularity theory
//! as per-record inequality checks.

mod brakke;
mod checks;
mod kernels;
mod report;

pub use brakke::{brakke_terms, BrakkeMonitor, BrakkeTerms, TestField};
pub use checks::{
    measure_in_ball, CurvatureEhMonitor, DensityMonitor, GradientEhMonitor, HeightMonitor,
    MeasureMonitor, MonotoneIntegral,
};
pub use kernels::{
    gaussian_density_ratio, heat_kernel, phi_rho, DensityRatio, EtaForm, KernelPoint, Upsilon,
    KERNEL_TRUNCATION,
};
pub use report::{Monitor, MonitorReport, Observation};

/// Default relative tolerance for the monotone integrals, per record.
pub const TOL_MONO: f64 = 1e-6;
/// Default density excess `d₀`.
pub const DENSITY_D0: f64 = 0.1;
/// Default relative tolerance of the integrated flow identity.
pub const TOL_IDENTITY: f64 = 0.02;
