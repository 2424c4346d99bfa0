//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration value is out of its legal range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Cross-referenced artifacts disagree (missing/duplicate ids, stale hashes).
    #[error("data integrity: {0}")]
    DataIntegrity(String),

    /// A numeric operation left its domain (log of zero, non-finite value).
    #[error("numeric domain: {0}")]
    NumericDomain(String),

    /// A class referenced during augmentation has no samples.
    #[error("class {class} has no samples")]
    EmptyClass { class: usize },

    /// Remote annotator unreachable after the configured retries.
    #[error("annotation unavailable: {0}")]
    AnnotationUnavailable(String),

    /// Remote annotator answered, but the payload does not follow the protocol.
    /// The raw payload is kept for debugging.
    #[error("protocol error: {message} (payload: {payload})")]
    Protocol { message: String, payload: String },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch} (learning rate {learning_rate})")]
    TrainingDiverged { epoch: usize, learning_rate: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid_input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub fn invalid_config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub fn data_integrity(msg: impl Into<String>) -> Self {
        Error::DataIntegrity(msg.into())
    }

    pub fn numeric_domain(msg: impl Into<String>) -> Self {
        Error::NumericDomain(msg.into())
    }
}
