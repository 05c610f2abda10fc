use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),

    #[error("duplicate index {0}")]
    DuplicateIndex(usize),

    #[error("empty support")]
    EmptySupport,

    #[error("ill-conditioned support {support:?}")]
    IllConditioned { support: Vec<usize> },

    #[error("column {column} has norm {norm}, expected unit norm")]
    NotUnitNorm { column: usize, norm: f64 },

    #[error("{count} subsets exceed the enumeration cap of {cap}; use the monte-carlo estimator")]
    CapExceeded { count: u128, cap: u64 },

    #[error("residual is zero; nothing left to select")]
    ZeroResidual,

    #[error("step {step} out of range, trace has {len} steps")]
    StepOutOfRange { step: usize, len: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("oracle failed at l = {l}: {source}")]
    Oracle {
        l: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
