use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model or solver parameter is outside its admissible range. `field`
    /// is the dotted configuration key the value came from.
    #[error("{field}: {message}")]
    InvalidParameter { field: &'static str, message: String },

    /// A pointwise query outside the domain of a function, e.g. the
    /// transfer coefficient at the origin.
    #[error("domain error: {0}")]
    Domain(String),

    /// The periodic phase-space box cannot hold the requested evolution.
    #[error("aliasing: {0}")]
    Aliasing(String),

    #[error("grid mismatch: {0}")]
    Grid(String),

    /// Quadrature failed to converge, typically because the integral diverges.
    #[error("quadrature: {0}")]
    Quadrature(String),

    #[error("dimension {dimension} is not supported by {what}")]
    UnsupportedDimension { dimension: usize, what: &'static str },

    /// A numerical precondition (step size, sampling acceptance, ...) failed.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// An internal consistency check failed. Always a bug.
    #[error("internal check failed: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field,
            message: message.into(),
        }
    }
}
