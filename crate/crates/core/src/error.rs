use thiserror::Error;

/// Errors raised by the matrix kernels, builders and analytics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("eigensolver did not converge after {sweeps} sweeps (relative residual {residual:e})")]
    Convergence { sweeps: usize, residual: f64 },

    #[error("index {index} out of range for {len} entities")]
    Index { index: usize, len: usize },

    #[error("unknown entity id `{0}`")]
    Lookup(String),

    #[error(
        "Lebesgue concentration diverges for exponent q = {q}: the integral over [r, ∞) \
         converges only for q > 1 (and r > 0)"
    )]
    Divergence { q: f64 },

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
