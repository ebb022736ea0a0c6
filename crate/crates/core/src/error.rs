use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported cell count {0}: only 1 or 7 cells are laid out")]
    UnsupportedCellCount(usize),

    #[error("user drop failed after {attempts} rejection attempts")]
    SamplingFailure { attempts: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("channel estimate has zero norm")]
    ZeroEstimate,

    #[error("invalid regime: {0}")]
    InvalidRegime(String),

    #[error("k-means called with no values")]
    EmptyInput,

    #[error("schedule trains {selected} groups but only {limit} are allowed")]
    ConstraintViolation { selected: usize, limit: usize },

    #[error("group {0} is already selected")]
    AlreadySelected(usize),

    #[error("exhaustive search over {groups} groups exceeds the guard of {guard}")]
    TooLarge { groups: usize, guard: usize },

    #[error("no samples to take a quantile of")]
    EmptySamples,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by bad user input rather than a failed computation.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::UnsupportedCellCount(_)
                | Error::InvalidConfig(_)
                | Error::InvalidRegime(_)
                | Error::ConstraintViolation { .. }
                | Error::TooLarge { .. }
                | Error::Parse { .. }
        )
    }
}
