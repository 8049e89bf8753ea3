use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by the runner to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numeric,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index out of range: {0}")]
    Range(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("floating overflow while computing h_{n}")]
    Overflow { n: usize },

    #[error("quadrature did not converge on {term}: estimate {estimate:e}, error {error:e}")]
    Quadrature { term: String, estimate: f64, error: f64 },

    #[error("series truncation failed: {0}")]
    Truncation(String),

    #[error("truncation certificate {achieved:e} exceeds requested {requested:e}")]
    Certificate { achieved: f64, requested: f64 },

    #[error("underflow floor reached in {0}")]
    Underflow(String),

    #[error("chemical potential search unbounded: {0}")]
    UnboundedSearch(String),

    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidParameter { .. } | Error::Range(_) | Error::TooLarge(_) => ErrorKind::Validation,
            _ => ErrorKind::Numeric,
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
