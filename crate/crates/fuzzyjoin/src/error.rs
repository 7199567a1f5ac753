use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bad input line {line}: {message}")]
    Parse { line: usize, message: String },
}

impl Error {
    /// Process exit code: 1 for I/O and data errors, 2 for configuration errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } | Error::Parse { .. } => 1,
            Error::InvalidArgument(_) => 2,
        }
    }
}
