use thiserror::Error;

/// Broad classes of failure, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad parameters or malformed specs supplied by the caller.
    Usage,
    /// Unreadable, ragged or otherwise unusable input data.
    Data,
    /// A numerical routine failed (non-PSD Gram, eigensolver, factorization).
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at index {0}")]
    NonFinite(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("kernel is not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    #[error("symmetric eigensolver did not converge")]
    EigenSolver,

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("{n} points exceed the Gram memory cap of {cap}")]
    TooLarge { n: usize, cap: usize },

    #[error("line {line}{}: {message}", column.map(|c| format!(", column {c}")).unwrap_or_default())]
    Parse {
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn parse(line: usize, column: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidParameter(_) => ErrorClass::Usage,
            Error::DimensionMismatch { .. }
            | Error::NonFinite(_)
            | Error::Empty(_)
            | Error::TooLarge { .. }
            | Error::Parse { .. }
            | Error::Io(_) => ErrorClass::Data,
            Error::NotPositiveSemidefinite(_) | Error::EigenSolver | Error::Factorization(_) => {
                ErrorClass::Numeric
            }
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
