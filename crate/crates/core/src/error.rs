use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An operation was evaluated outside of its domain (inactive node,
    /// non-finite input, kernel evaluated at or after its target time, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A surface or configuration violates a structural invariant.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// A parameter is out of range. `field` is a dotted path into the
    /// configuration object that carried the value.
    #[error("{field}: {reason}")]
    Config { field: String, reason: String },

    /// An update produced a non-finite value.
    #[error("non-finite update at t = {t}")]
    BlowUp { t: f64 },

    /// A fixed time step violates the explicit stability bound.
    #[error("time step {dt} exceeds the stability bound {limit}")]
    Cfl { dt: f64, limit: f64 },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
