use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} values, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("grid mismatch: {0} vs {1} points per axis")]
    GridMismatch(usize, usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("corrupt field: conjugate symmetry violated by {0:e}")]
    CorruptField(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported parameter: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
