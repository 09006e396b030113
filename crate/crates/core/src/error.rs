//! Error type shared across the crate.

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by constructors and evaluation engines.
///
/// Every public entry point validates its arguments and reports violations
/// through [`Error::Domain`] rather than panicking; `Numerical` is reserved
/// for evaluations that cannot meet their accuracy contract at runtime
/// (e.g. a quadrature rule that fails its refinement gate).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the documented domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// A numerical routine could not reach its accuracy target.
    #[error("numerical error: {0}")]
    Numerical(String),
    /// Malformed text in a configuration string.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
