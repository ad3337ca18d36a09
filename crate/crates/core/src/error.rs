use thiserror::Error;

/// Errors raised by ingestion, scoring and corpus assembly.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown feature `{name}`")]
    UnknownFeature { line: usize, name: String },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("contract violation: {0}")]
    Contract(String),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    /// True for errors caused by a caller breaking an interface contract
    /// (shapes, split sizes, missing gold sentences) rather than bad input data.
    pub fn is_contract_violation(&self) -> bool {
        matches!(self, Error::Shape(_) | Error::Contract(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
