use std::path::PathBuf;

use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: format version {found} is not supported (expected {expected})")]
    Version {
        path: PathBuf,
        found: String,
        expected: &'static str,
    },
    #[error("bad descriptor: {0}")]
    Descriptor(String),
    #[error("bad experiment spec: {0}")]
    Spec(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] statcost_core::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}
