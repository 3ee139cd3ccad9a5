use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Failures of the command-line layer, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("cannot read config {}: {source}", path.display())]
    ConfigRead { path: PathBuf, source: io::Error },
    #[error("cannot parse config {}: {message}", path.display())]
    ConfigParse { path: PathBuf, message: String },
    #[error("invalid config: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("unknown suite `{name}` (known: {known})")]
    UnknownSuite { name: String, known: String },
    #[error("invalid input {}: {message}", path.display())]
    Input { path: PathBuf, message: String },
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] imm_core::Error),
    #[error("I/O error at {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    TestFailure(String),
}

impl AppError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        AppError::Io { path: path.into(), source }
    }

    /// 1: invalid input, 2: I/O failure, 3: failed validation.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 2,
            AppError::TestFailure(_) => 3,
            _ => 1,
        }
    }
}

pub type AppResult<T> = std::result::Result<T, AppError>;
