use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unsupported dimension {0} (only 1..=4 is supported)")]
    UnsupportedDimension(usize),

    #[error("characteristic root iteration failed: {0}")]
    NoConvergence(String),

    /// A non-finite value appeared while integrating.
    #[error("integration blew up at t = {t}")]
    BlowUp { t: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("too few usable samples for a fit: need at least {needed}, have {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
