//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("word too long: {len} characters (limit is {limit})")]
    WordTooLong { len: usize, limit: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: i64, num_classes: usize },

    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },

    #[error("sequence too short: {0}")]
    SequenceTooShort(String),

    #[error("config mismatch: {0}")]
    ConfigMismatch(String),

    #[error("empty split: {0}")]
    EmptySplit(&'static str),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {found} (expected {expected})")]
    VersionMismatch { expected: u32, found: u32 },

    #[error("corrupt file: {0}")]
    CorruptLength(String),

    #[error("usage: {0}")]
    Usage(String),

    #[error("gradient check failed: max relative error {max_rel_error} exceeds {threshold}")]
    GradCheckFailed { max_rel_error: f64, threshold: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn shape(msg: impl Into<String>) -> Self {
        Error::ShapeMismatch(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
