//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors raised by corpus loading, graph analysis, modelling and scoring.
#[derive(Debug, Error)]
pub enum Error {
    /// A record could not be parsed as JSON.
    #[error("line {line}: malformed record: {message}")]
    Parse { line: usize, message: String },

    /// A record parsed but violates the input schema.
    #[error("line {line}: schema violation: {message}")]
    Schema { line: usize, message: String },

    /// Invalid configuration or parameter.
    #[error("configuration error: {0}")]
    Config(String),

    /// The input data cannot support the requested computation.
    #[error("data error: {0}")]
    Data(String),

    /// An iterative method did not reach its tolerance.
    #[error("{method} did not converge after {iterations} iterations")]
    Convergence {
        method: &'static str,
        iterations: usize,
    },

    /// The post scorer misbehaved (transport failure or protocol violation).
    #[error("scorer error: {message}{}", offending_line.as_ref().map(|l| format!(" (line: {l})")).unwrap_or_default())]
    Scorer {
        message: String,
        offending_line: Option<String>,
    },

    /// The post scorer did not answer in time.
    #[error("scorer timed out after {seconds:.1}s with {pending} pending requests")]
    Timeout { seconds: f64, pending: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn scorer(message: impl Into<String>, line: Option<&str>) -> Self {
        Error::Scorer {
            message: message.into(),
            offending_line: line.map(str::to_owned),
        }
    }

    /// True for errors caused by bad configuration rather than bad data.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }

    /// Short machine-readable code used by the command line front end.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "parse",
            Error::Schema { .. } => "schema",
            Error::Config(_) => "config",
            Error::Data(_) => "data",
            Error::Convergence { .. } => "convergence",
            Error::Scorer { .. } => "scorer",
            Error::Timeout { .. } => "timeout",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
