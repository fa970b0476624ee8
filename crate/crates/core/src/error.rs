use thiserror::Error;

/// Errors shared by every subsystem.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation (for example a
    /// nonpositive weight).
    #[error("domain error: {0}")]
    Domain(String),
    /// Arguments are individually valid but do not fit together.
    #[error("contract violation: {0}")]
    Contract(String),
    /// The requested size exceeds what the chosen method can handle.
    #[error("size limit: {0}")]
    Size(String),
    /// A gamma-function pole was hit.
    #[error("pole of the gamma function at {re}{im:+}i")]
    Pole { re: f64, im: f64 },
    /// An iterative method did not converge.
    #[error("no convergence: {0}")]
    Convergence(String),
    /// Input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn contract(msg: impl Into<String>) -> Error {
    Error::Contract(msg.into())
}
