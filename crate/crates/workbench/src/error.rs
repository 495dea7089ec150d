//! Workbench errors and their process exit codes.

use qnvp_core::Error as CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorkbenchError {
    #[error("{file}:{line}:{column}: {message}")]
    ConfigParse { file: String, line: usize, column: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("output directory {0} is not empty (use --force to reuse it)")]
    OutputExists(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl WorkbenchError {
    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        WorkbenchError::Io { path: path.display().to_string(), source }
    }

    /// 3 for numerical failures of the core, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            WorkbenchError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

pub type WorkbenchResult<T> = Result<T, WorkbenchError>;
