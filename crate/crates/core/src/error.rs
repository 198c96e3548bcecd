use thiserror::Error;

/// Errors raised anywhere in the benchmark.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("message length {0} too large for exhaustive search (max 14)")]
    EnumerationTooLarge(usize),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid task distribution: {0}")]
    InvalidDistribution(String),
    #[error("unknown scenario `{name}`; valid names: {valid}")]
    UnknownScenario { name: String, valid: String },
    #[error("unknown learner `{name}`; valid names: {valid}")]
    UnknownLearner { name: String, valid: String },
    #[error("invalid dataset request: {0}")]
    InvalidDataset(String),
    #[error("insufficient data for episode: {0}")]
    InsufficientData(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
