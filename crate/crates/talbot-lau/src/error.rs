//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an input value was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration admits no signal (e.g. zero total transmission,
    /// no transmitted Monte Carlo samples, empty velocity acceptance).
    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    /// A numerical consistency check failed; the result cannot be trusted.
    #[error("numerical failure: {0}")]
    Numerics(String),

    /// Input data (frames, sidecars, tabulated distributions) are malformed
    /// or mutually inconsistent.
    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::Degenerate(msg.into())
    }

    pub fn numerics(msg: impl Into<String>) -> Self {
        Error::Numerics(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
