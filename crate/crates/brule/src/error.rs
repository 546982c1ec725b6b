use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced by the command-line tool, each with its exit code.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Validation(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Planning(String),
    #[error("{0}")]
    Numerical(String),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) | AppError::Io { .. } => 2,
            AppError::Planning(_) => 3,
            AppError::Numerical(_) => 4,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    /// Prefixes a validation message with the offending field.
    pub fn field(field: &str, msg: impl std::fmt::Display) -> Self {
        AppError::Validation(format!("{field}: {msg}"))
    }
}

impl From<brule_core::Error> for AppError {
    fn from(e: brule_core::Error) -> Self {
        use brule_core::Error as E;
        match e {
            E::NoPath { .. } => AppError::Planning(e.to_string()),
            E::Numerical(_) | E::Singular => AppError::Numerical(e.to_string()),
            _ => AppError::Validation(e.to_string()),
        }
    }
}
