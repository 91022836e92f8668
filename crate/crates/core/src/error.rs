use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the engine. Every variant maps onto a stable
/// machine-readable [`Error::code`] that the HTTP layer forwards to clients.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),

    #[error("invalid field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("corpus contains no valid songs")]
    EmptyCorpus,

    #[error("training error: {0}")]
    Training(String),

    #[error("constraint unsatisfiable ({constraint}): {message}")]
    ConstraintUnsatisfiable { constraint: String, message: String },

    #[error("language model backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("generation exhausted after {rounds} rounds: {diagnostics:?}")]
    GenerationExhausted { rounds: usize, diagnostics: Vec<String> },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("format error: {0}")]
    Format(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn validation(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), message: message.into() }
    }

    pub fn unsatisfiable(constraint: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConstraintUnsatisfiable { constraint: constraint.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn code(&self) -> &'static str {
        match self {
            Error::Input(_) => "input_error",
            Error::Validation { .. } => "validation_error",
            Error::Config(_) => "configuration_error",
            Error::EmptyCorpus => "empty_corpus",
            Error::Training(_) => "training_error",
            Error::ConstraintUnsatisfiable { .. } => "constraint_unsatisfiable",
            Error::BackendUnavailable(_) => "backend_unavailable",
            Error::InternalInvariant(_) => "internal_invariant",
            Error::NotFound(_) => "not_found",
            Error::GenerationExhausted { .. } => "generation_exhausted",
            Error::Io { .. } => "io_error",
            Error::Format(_) => "format_error",
        }
    }
}
