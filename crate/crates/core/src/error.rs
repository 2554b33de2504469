use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported loss: {0}")]
    UnsupportedLoss(String),

    #[error("unsupported combination: {0}")]
    UnsupportedCombination(String),

    #[error("internal consistency violated: {0}")]
    Inconsistent(String),

    #[error("ill-conditioned system: {0}")]
    IllConditioned(String),

    #[error("marginal mismatch: source mass {source_mass}, target mass {target_mass}")]
    MarginalMismatch { source_mass: f64, target_mass: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
