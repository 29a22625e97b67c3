use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter outside its allowed range (λ, sample size, fps, alpha...).
    #[error("domain error: {0}")]
    Domain(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("decode error on {}: {message}", path.display())]
    Decode { path: PathBuf, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("contract error: {0}")]
    Contract(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("environment error: {message} (hint: {hint})")]
    Environment { message: String, hint: String },

    /// Transient failure (timeout, refused connection, 5xx, 429).
    #[error("retryable error from {endpoint}: {message}")]
    Retryable { endpoint: String, message: String },

    #[error("authentication failed for {endpoint}: {message}")]
    Auth { endpoint: String, message: String },

    #[error("request to {endpoint} rejected: {message}")]
    Rejected { endpoint: String, message: String },

    #[error("retries exhausted after {attempts} attempts: {}", log.join("; "))]
    RetriesExhausted { attempts: u32, log: Vec<String> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::Retryable { .. })
    }

    /// Short stable name of the variant, used in machine-readable output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Degenerate(_) => "degenerate",
            Error::Precondition(_) => "precondition",
            Error::Io { .. } => "io",
            Error::Decode { .. } => "decode",
            Error::Format(_) => "format",
            Error::Validation(_) => "validation",
            Error::Parse { .. } => "parse",
            Error::Contract(_) => "contract",
            Error::Config(_) => "config",
            Error::Environment { .. } => "environment",
            Error::Retryable { .. } => "retryable",
            Error::Auth { .. } => "auth",
            Error::Rejected { .. } => "rejected",
            Error::RetriesExhausted { .. } => "retries_exhausted",
        }
    }

    /// Errors caused by bad input or configuration rather than by the run itself.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::Domain(_)
                | Error::Degenerate(_)
                | Error::Precondition(_)
                | Error::Format(_)
                | Error::Validation(_)
                | Error::Parse { .. }
                | Error::Config(_)
        )
    }
}
