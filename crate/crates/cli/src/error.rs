use std::path::Path;

use clotseg::report::ErrorBody;
use clotseg::ClassifyError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    /// Bad input data: printed as `{"error", "message"}` JSON on stderr.
    #[error("{message}")]
    Validation { code: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn validation(code: &str, message: impl Into<String>) -> Self {
        CliError::Validation {
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Validation { .. } => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    pub fn body(&self) -> ErrorBody {
        let (code, message) = match self {
            CliError::Usage(m) => ("usage", m.clone()),
            CliError::Validation { code, message } => (code.as_str(), message.clone()),
            CliError::Io(m) => ("io", m.clone()),
        };
        ErrorBody {
            error: code.to_string(),
            message,
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::validation(e.code(), e.to_string())
    }
}
