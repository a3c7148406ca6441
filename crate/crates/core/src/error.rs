use thiserror::Error;

/// Errors raised by kernel evaluation, estimation, forecasting and simulation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A time or parameter lies outside the domain where an operation is defined.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// New observation does not advance time.
    #[error("ordering error: time {t} is not after {previous}")]
    Ordering { t: f64, previous: f64 },

    #[error("matrix is singular at t = {t}")]
    Singular { t: f64 },

    /// Query beyond the admissible horizon of the kernel.
    #[error("time {t} exceeds the admissible horizon {bound}")]
    Horizon { t: f64, bound: f64 },

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("unsupported dimension {m}: only scalar processes are supported")]
    UnsupportedDimension { m: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
