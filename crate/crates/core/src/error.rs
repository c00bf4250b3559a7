use thiserror::Error;

/// Errors surfaced by the engine.
///
/// Parse and validation errors come from untrusted documents; usage and
/// state errors come from callers asking for something the model forbids.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid document: {0}")]
    Document(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("state error: {0}")]
    State(String),

    #[error("infeasible constraints: {0}")]
    Infeasible(String),

    #[error("load error at {location}: {message}")]
    Load { location: String, message: String },
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn validation(message: impl Into<String>) -> Self {
        Error::Validation(message.into())
    }

    pub(crate) fn usage(message: impl Into<String>) -> Self {
        Error::Usage(message.into())
    }

    pub(crate) fn load(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Load {
            location: location.into(),
            message: message.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
