//! Canonical number formatting for CSV output.
//!
//! Every value is written as the shortest decimal string that parses back to
//! the same `f64`. Plain notation is used in the range where it stays short,
//! exponent notation elsewhere.

/// Shortest round-trip representation of `x`.
pub fn canonical(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Formats an optional value; `None` becomes an empty CSV cell.
pub fn canonical_opt(x: Option<f64>) -> String {
    x.map(canonical).unwrap_or_default()
}
