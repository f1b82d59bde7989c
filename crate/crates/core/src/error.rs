use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("polynomial factor {index} is negative at x = {at} (value {value})")]
    NegativeDensity { index: usize, at: f64, value: f64 },

    #[error("density has non-positive total mass {0}")]
    DegenerateDensity(f64),

    #[error("density vanishes on every sample point")]
    ZeroWeights,

    #[error("weights are invalid: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("exact star discrepancy is only available for d <= 2 (got d = {0})")]
    UnsupportedDimension(usize),

    #[error("rejection sampler exceeded {0} trials; region geometry is inconsistent")]
    RejectionLimit(usize),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
