use thiserror::Error;

/// Errors produced by the simulation, estimation and harness layers.
#[derive(Debug, Error)]
pub enum Error {
    /// The caller passed arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// The requested computation is not available for this model.
    #[error("unsupported: {what}; use {alternative} instead")]
    Unsupported { what: String, alternative: String },

    /// A configured memory or size budget would be exceeded.
    #[error("resource limit: {what} needs {needed}, budget is {budget}")]
    Resource {
        what: String,
        needed: u128,
        budget: u128,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),

    /// The model produces zero conditional covariance, so rescaled paths are undefined.
    #[error("degenerate model: {0}")]
    Degenerate(String),

    #[error("malformed path: {0}")]
    MalformedPath(String),

    /// A kernel or environment specification violates its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("config error{}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default(), field.as_ref().map(|f| format!(" (field `{f}`)")).unwrap_or_default())]
    Config {
        line: Option<usize>,
        field: Option<String>,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn invalid_model(msg: impl Into<String>) -> Self {
        Error::InvalidModel(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
