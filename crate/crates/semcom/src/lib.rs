//! IO, experiment harness and CLI companion to `semcom-core`.

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod harness;

pub use config::RunConfig;

/// Crate-level error: wraps core numerics plus IO/format failures and
/// carries the process exit code policy.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("numeric abort: {0}")]
    Numeric(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<semcom_core::Error> for AppError {
    fn from(e: semcom_core::Error) -> Self {
        match e {
            semcom_core::Error::NonFinite { .. } => AppError::Numeric(e.to_string()),
            _ => AppError::Data(e.to_string()),
        }
    }
}

impl AppError {
    /// CLI exit code: 1 usage, 2 data/format, 3 numeric abort.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 1,
            AppError::Data(_) | AppError::Io(_) => 2,
            AppError::Numeric(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
