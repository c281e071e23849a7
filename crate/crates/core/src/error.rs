use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Shape mismatch, index out of range, or a parameter outside its domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An exhaustive enumeration would exceed the configured subset cap.
    #[error("enumeration of {required} subsets exceeds cap of {cap}; use sampled mode")]
    Capacity { required: u128, cap: u128 },

    #[error("malformed matrix file at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("non-finite value at row {row}, col {col}")]
    NonFinite { row: usize, col: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invariant violated in suite `{suite}` (seed {seed}, subset {subset:?}): {detail}")]
    Invariant {
        suite: String,
        seed: u64,
        subset: Vec<usize>,
        detail: String,
    },
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Argument(_) | Error::Config(_) | Error::Capacity { .. } => 2,
            Error::Io { .. } => 3,
            Error::Format { .. } | Error::NonFinite { .. } | Error::Degenerate(_) => 4,
            Error::Invariant { .. } => 5,
        }
    }
}
