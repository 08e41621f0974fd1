use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}, line {line}, column `{column}`: cannot parse {value:?} as a number")]
    NonNumeric { path: PathBuf, line: u64, column: String, value: String },

    #[error("{0}")]
    InvalidData(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] reweight_core::Error),

    #[error("{estimator}: {failed} of {total} test points failed (limit {limit:.1}%)")]
    TooManyFailures { estimator: String, failed: usize, total: usize, limit: f64 },

    #[error("serialization failed: {0}")]
    Serialize(String),
}

impl HarnessError {
    /// True for errors raised by the numerical routines, as opposed to bad
    /// input or I/O.
    pub fn is_numerical(&self) -> bool {
        match self {
            HarnessError::Core(e) => !matches!(
                e,
                reweight_core::Error::InvalidInput(_) | reweight_core::Error::DimensionMismatch { .. }
            ),
            HarnessError::TooManyFailures { .. } => true,
            _ => false,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
