use thiserror::Error;

/// Errors produced anywhere in the sampling toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("point {point:?} lies outside the design domain")]
    DomainViolation { point: Vec<f64> },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("duplicate input row at index {index}")]
    DuplicateInput { index: usize },

    #[error("kernel matrix is not positive definite (jitter levels tried: {jitter_levels:?})")]
    Factorization { jitter_levels: Vec<f64> },

    #[error("hyperparameter fit failed: {0}")]
    Fit(String),

    #[error("optimizer failed: {0}")]
    Optimizer(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("unknown benchmark function `{0}`")]
    UnknownFunction(String),

    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("strategy `{strategy}` cannot run on `{function}`: {reason}")]
    Incompatible {
        strategy: String,
        function: String,
        reason: String,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
