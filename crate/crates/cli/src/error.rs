use std::path::PathBuf;

use thiserror::Error;

/// Failures of a subcommand, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable or invalid spec, unusable output path.
    #[error("{0}")]
    Usage(String),

    /// The scenario errored while running.
    #[error("{0}")]
    Runtime(String),

    /// A run directory does not match its manifest.
    #[error("run directory {} is incomplete:\n{}", dir.display(), gaps.join("\n"))]
    Incomplete { dir: PathBuf, gaps: Vec<String> },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) | CliError::Incomplete { .. } | CliError::Io { .. } => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<mcflab_core::Error> for CliError {
    fn from(e: mcflab_core::Error) -> Self {
        match e {
            mcflab_core::Error::Config { .. } => CliError::Usage(format!("invalid spec: {e}")),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_are_usage_errors() {
        let e: CliError = mcflab_core::Error::Config {
            field: "params.radius".into(),
            reason: "must be > 0".into(),
        }
        .into();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("params.radius"));
        let e: CliError = mcflab_core::Error::BlowUp { t: 0.5 }.into();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn incomplete_lists_every_gap() {
        let e = CliError::Incomplete {
            dir: "run".into(),
            gaps: vec!["a.json: missing".into(), "b.csv: checksum mismatch".into()],
        };
        assert_eq!(e.exit_code(), 1);
        let text = e.to_string();
        assert!(text.contains("a.json: missing") && text.contains("b.csv: checksum mismatch"));
    }
}
