//! File formats, seeded sampling and the experiment tables behind the `mvd`
//! command-line tool.

pub mod format;
pub mod reproduce;
pub mod sample;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot read `{path}`: {message}")]
    Io { path: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("cap exceeded: {0}")]
    CapExceeded(String),

    #[error(transparent)]
    Core(#[from] mvd_core::Error),
}

impl HarnessError {
    /// 1 for failed validation, 2 for anything wrong with the input.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Validation(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
