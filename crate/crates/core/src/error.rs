use thiserror::Error;

/// Errors raised by the counting and evaluation routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An argument is valid but beyond what a table or grid covers.
    #[error("range error: {0}")]
    Range(String),
    /// A configured resource cap would be exceeded.
    #[error("resource cap exceeded: {message}")]
    Resource {
        message: String,
        /// Pre-flight estimate of the work, when one was computed.
        estimate: Option<f64>,
    },
    /// An iterative solver failed to converge on valid input.
    #[error("numeric failure: {0}")]
    Numeric(String),
    /// Malformed serialized data (prime cache, CSV).
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Range(msg.into()))
}
