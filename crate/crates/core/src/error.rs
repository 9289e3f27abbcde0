use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid partition: block side {m} does not fit grid side {n} (need 1 <= m < n)")]
    InvalidPartition { n: usize, m: usize },

    #[error("unsupported size: {0}")]
    UnsupportedSize(String),

    #[error("invalid scanner: {0}")]
    InvalidScanner(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("value out of range: {0}")]
    OutOfRange(String),

    #[error("sequence of length {len} is too short for order {order}")]
    SequenceTooShort { len: usize, order: usize },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("not tabulated: {0}")]
    NotTabulated(String),

    #[error("invalid parameter `{field}`: {msg}")]
    InvalidParameter { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &str, msg: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.to_string(),
            msg: msg.into(),
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
