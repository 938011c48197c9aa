use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfouError {
    /// An argument violated a precondition (range, size, shape).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical routine failed to reach its tolerance or two routes disagreed.
    #[error("numerical failure: {message} (achieved error {achieved:.3e})")]
    Numerical { message: String, achieved: f64 },

    /// A computation would exceed a configured size cap.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The simulated path carries no information (zero energy).
    #[error("degenerate path: {0}")]
    DegeneratePath(String),
}

impl CfouError {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        CfouError::Argument(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>, achieved: f64) -> Self {
        CfouError::Numerical {
            message: msg.into(),
            achieved,
        }
    }
}

pub type Result<T, E = CfouError> = std::result::Result<T, E>;
