use thiserror::Error;

/// Errors produced by solvers, checks and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum QoptError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A solver exceeded its iteration cap or produced an inconsistent state.
    /// Carries the last iterate so callers can inspect where it stalled.
    #[error("numerical failure: {message}")]
    NumericalFailure {
        message: String,
        last_iterate: Vec<f64>,
    },

    #[error("config error in field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl QoptError {
    pub fn invalid(msg: impl Into<String>) -> Self {
        QoptError::InvalidArgument(msg.into())
    }

    pub fn precondition(msg: impl Into<String>) -> Self {
        QoptError::Precondition(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, last_iterate: &[f64]) -> Self {
        QoptError::NumericalFailure {
            message: msg.into(),
            last_iterate: last_iterate.to_vec(),
        }
    }

    pub fn config(field: impl Into<String>, msg: impl Into<String>) -> Self {
        QoptError::Config {
            field: field.into(),
            message: msg.into(),
        }
    }
}

impl From<std::io::Error> for QoptError {
    fn from(e: std::io::Error) -> Self {
        QoptError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, QoptError>;
