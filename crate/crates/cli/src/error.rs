use std::path::PathBuf;

use thiserror::Error;

use crate::config::Diagnostic;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration rejected:\n{}", list(.0))]
    Validation(Vec<Diagnostic>),

    #[error("{0}")]
    Numerical(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn list(d: &[Diagnostic]) -> String {
    d.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Validation(vec![Diagnostic {
            path: path.into(),
            message: message.into(),
        }])
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

/// Errors from the numerical core during a run. Parameter problems that slip
/// past validation still count as validation failures.
impl From<dampgap::Error> for CliError {
    fn from(e: dampgap::Error) -> Self {
        match e {
            dampgap::Error::InvalidParameter { name, .. } => CliError::invalid(name, e.to_string()),
            dampgap::Error::MemoryBudget { .. } => CliError::invalid("grid", e.to_string()),
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
