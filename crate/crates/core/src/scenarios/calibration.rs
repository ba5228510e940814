//! Default constants `Ĉ`, each twice the largest value required on the
//! calibration battery: every scenario at resolutions 128, 256 and 384
//! (curves at twice that) with seed 1, and the seeded scenarios at
//! resolution 256 with seeds 2 to 5.

/// Height drift constant of the slab estimate.
pub const HEIGHT_C_HAT: f64 = 0.45;
/// Curvature estimate constant.
pub const CURVATURE_C_HAT: f64 = 0.076;
/// Decay bounds on `[ε, 2ε]` once the fold has become graphical.
pub const BECOME_C_HAT: f64 = 0.41;
/// `max|A|·√(t−t₀)` for the steep ramp.
pub const BOUNDED_C_HAT: f64 = 0.56;
