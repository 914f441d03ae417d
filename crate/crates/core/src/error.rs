use thiserror::Error;

pub type Result<T> = std::result::Result<T, FcpcaError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FcpcaError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid lag {lag} for series of length {len}")]
    InvalidLag { lag: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A cluster received zero total weight during the axis update.
    #[error("cluster {cluster} has zero total membership weight")]
    DegenerateCluster { cluster: usize },

    #[error("degenerate clusters persisted after {attempts} re-initializations")]
    DegenerateExhausted { attempts: usize },

    #[error("cluster validity index is undefined for a single cluster")]
    UndefinedCvi,
}
