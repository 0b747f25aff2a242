use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed WAV data: {0}")]
    Decode(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("cannot normalize an all-zero signal")]
    CannotNormalize,

    #[error("insufficient audio: need {needed} samples, got {got}")]
    InsufficientAudio { needed: usize, got: usize },

    #[error("insufficient frames: need {needed}, got {got}")]
    InsufficientFrames { needed: usize, got: usize },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("invalid data: {0}")]
    Data(String),

    #[error("malformed file format: {0}")]
    Format(String),

    #[error("undefined relevance: target has zero variance")]
    UndefinedRelevance,

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("fold error: {0}")]
    Fold(String),

    #[error("leakage: test sample {0} reached a fit stage")]
    Leakage(String),

    #[error("degenerate statistical test: {0}")]
    DegenerateTest(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl CoreError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<csv::Error> for CoreError {
    fn from(e: csv::Error) -> Self {
        CoreError::Format(e.to_string())
    }
}

impl From<serde_json::Error> for CoreError {
    fn from(e: serde_json::Error) -> Self {
        CoreError::Serde(e.to_string())
    }
}
