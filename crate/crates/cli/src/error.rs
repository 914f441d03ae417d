use std::path::Path;

use fcpca_core::FcpcaError;
use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, malformed or inconsistent input files.
    #[error("{0}")]
    Validation(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// The algorithm could not produce a non-degenerate solution.
    #[error("{0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Degenerate(_) => 2,
            CliError::Validation(_) | CliError::Io { .. } => 1,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

impl From<FcpcaError> for CliError {
    fn from(e: FcpcaError) -> Self {
        match e {
            FcpcaError::DegenerateCluster { .. } | FcpcaError::DegenerateExhausted { .. } => {
                CliError::Degenerate(format!("{e}; try fewer clusters or a lower variance ratio"))
            }
            other => CliError::Validation(other.to_string()),
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}
