//! CLI failures and their exit codes.

use std::path::{Path, PathBuf};

use grmkit::panel::PanelError;
use thiserror::Error;

pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    /// Flags that are missing, inconsistent or meaningless together.
    #[error("usage: {0}")]
    Usage(String),
    #[error("input file not found: {}", .0.display())]
    MissingInput(PathBuf),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {}: {message}", path.display())]
    Config { path: PathBuf, message: String },
    #[error("{}: {message}", path.display())]
    BadFile { path: PathBuf, message: String },
    #[error(transparent)]
    Core(#[from] grmkit::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl From<PanelError> for CliError {
    fn from(e: PanelError) -> Self {
        CliError::Core(e.into())
    }
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
