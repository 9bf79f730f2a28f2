//! Harness errors mapped to process exit codes.

use std::process::ExitCode;

pub type Result<T> = std::result::Result<T, HarnessError>;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    /// Bad configuration file, unknown identifier or inconsistent settings.
    #[error("config error: {0}")]
    Config(String),

    /// A balance check exceeded its threshold.
    #[error("oracle violation: {0}")]
    Oracle(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("sampler error: {0}")]
    Sampler(#[from] mtm::Error),
}

impl HarnessError {
    pub fn config(message: impl Into<String>) -> Self {
        HarnessError::Config(message.into())
    }

    /// Process exit code: 2 for config errors, 3 for oracle violations,
    /// 1 otherwise.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            HarnessError::Config(_) => ExitCode::from(2),
            HarnessError::Oracle(_) => ExitCode::from(3),
            _ => ExitCode::from(1),
        }
    }
}
