use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum VddError {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested size exceeds what the dense or exact routines support.
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A VDD document could not be parsed or does not describe a valid graph.
    #[error("parse error in `{field}`: {message}")]
    Parse { field: String, message: String },

    /// The graph violates one or more structural invariants.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// A configuration is inconsistent or incomplete.
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    /// Training hit a non-finite gradient or loss.
    #[error("training error at epoch {epoch} ({label}): {message}")]
    Training {
        epoch: usize,
        label: String,
        message: String,
    },
}

impl VddError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        VddError::Domain(msg.into())
    }

    pub(crate) fn parse(field: impl Into<String>, message: impl Into<String>) -> Self {
        VddError::Parse {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        VddError::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, VddError>;
