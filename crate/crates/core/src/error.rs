use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid level {level} for variable with {levels} levels")]
    InvalidLevel { level: usize, levels: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input out of domain: {0}")]
    OutOfDomain(String),
    #[error("constant column {0} cannot be standardized")]
    ConstantColumn(String),
    #[error("level {0} has no observations")]
    MissingLevel(usize),
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("rejection sampling stalled for level {level} after {attempts} attempts")]
    SamplingStall { level: usize, attempts: usize },
    #[error("optimization failed: {0}")]
    Optimization(String),
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
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
