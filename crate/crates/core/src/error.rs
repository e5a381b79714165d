use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("k must be positive, got {0}")]
    NonPositiveK(String),

    #[error("velocity must lie in (-1, 1), got {0}")]
    VelocityOutOfRange(f64),

    #[error("count must be non-negative, got {0}")]
    NegativeCount(String),

    #[error("interval length must be non-negative, got {0}")]
    NegativeLength(String),

    #[error("degenerate interval: emission count N must be at least 1")]
    DegenerateInterval,

    #[error("reception rate out of range: {0}")]
    RateOutOfRange(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown event `{0}`")]
    UnknownEvent(String),

    #[error("unknown chain `{0}`")]
    UnknownChain(String),

    #[error("malformed network: {0}")]
    Structure(String),

    #[error("influence relation contains a cycle through `{0}`")]
    Cycle(String),

    #[error("json: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Json(err.to_string())
    }
}
