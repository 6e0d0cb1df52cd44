use thiserror::Error;

/// Errors produced by the riple pipeline.
#[derive(Debug, Error)]
pub enum RipleError {
    /// A file could not be parsed; carries the file name and 1-based line number.
    #[error("parse error in {file} at line {line}: {message}")]
    Parse {
        file: String,
        line: u64,
        message: String,
    },

    /// Input data violated a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A parameter was outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    /// SGD produced a non-finite factor value; the caller should lower the learning rate.
    #[error("training diverged at epoch {epoch}: {message}")]
    Training { epoch: usize, message: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RipleError>;
