use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("attribute table line {line}: {message}")]
    Table { line: usize, message: String },

    #[error("duplicate symbol {0:?} in attribute table")]
    DuplicateSymbol(String),

    #[error("unknown symbol {character:?} at position {position}")]
    UnknownSymbol { position: usize, character: char },

    #[error("unknown token {0:?}")]
    UnknownToken(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Precondition(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("teacher file: {0}")]
    Teacher(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),

    #[error("text {0:?} has no teacher vector")]
    MissingTeacher(String),

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
