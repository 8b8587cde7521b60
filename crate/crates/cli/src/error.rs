use std::path::Path;

use thiserror::Error;
use vdd::VddError;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing configuration; exits with status 2.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error(transparent)]
    Engine(VddError),

    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    /// A VDD file that failed validation.
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => 2,
            _ => 1,
        }
    }
}

impl From<VddError> for CliError {
    fn from(e: VddError) -> Self {
        match e {
            VddError::Config { key, message } => CliError::Config { key, message },
            other => CliError::Engine(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
