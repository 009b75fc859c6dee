use thiserror::Error;

/// Errors raised by the analysis, synthesis and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("graph is not connected")]
    NotConnected,

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid agent model: {0}")]
    InvalidModel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator has {rows} rows, above the dense limit of {limit}; use a smaller instance")]
    OperatorTooLarge { rows: usize, limit: usize },

    #[error("B'PB is numerically singular (B must have full column rank)")]
    SingularInnovation,

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),
}

pub type Result<T> = std::result::Result<T, Error>;
