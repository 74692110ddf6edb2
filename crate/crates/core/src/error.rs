use thiserror::Error;

/// Errors raised across the optimisers, problems and harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Cholesky factorisation failed even with the largest jitter tried.
    #[error("conditioning failed: matrix not positive definite after jitter {jitter:e}")]
    Conditioning { jitter: f64 },

    #[error("duplicate point: within {tol:e} of stored point {index}")]
    DuplicatePoint { index: usize, tol: f64 },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("parameter outside domain: {0}")]
    Domain(String),

    /// Every particle weight underflowed at time step `t` (1-based).
    #[error("particle degeneracy at t = {t}")]
    Degeneracy { t: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("line search failed after {trials} trials")]
    LineSearch { trials: usize },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
