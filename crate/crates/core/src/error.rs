use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid IOB sequence at {positions:?}")]
    InvalidIob { positions: Vec<(usize, usize)> },

    #[error("token `{token}`: {message}")]
    Segmentation { token: String, message: String },

    #[error("word not in vocabulary: `{0}`")]
    OutOfVocabulary(String),

    #[error("{0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("length mismatch: {expected} gold vs {actual} predicted")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("translation {src}->{tgt} failed: {message}")]
    Translation {
        src: String,
        tgt: String,
        message: String,
    },

    #[error("model format: {0}")]
    Model(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn model(message: impl Into<String>) -> Self {
        Error::Model(message.into())
    }
}
