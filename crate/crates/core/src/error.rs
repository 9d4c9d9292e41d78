use thiserror::Error;

use crate::ingest::WarcError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value violates one of its invariants. Raised before
    /// any data is touched.
    #[error("configuration error: {0}")]
    Config(String),

    /// A caller broke an operation's precondition (mismatched stage names,
    /// signature lengths, empty shingle sets, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input data is unusable: bad JSONL line, duplicate ids, out-of-range
    /// scores.
    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Warc(#[from] WarcError),

    #[error("i/o error on {path}: {source}")]
    Path {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn at_path(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Path {
            path: path.display().to_string(),
            source,
        }
    }

    /// Process exit code for this error: 2 for configuration/usage
    /// problems, 1 for everything that happens while processing data.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            _ => 1,
        }
    }

    /// Short machine-readable category, used in JSON error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Contract(_) => "contract",
            Error::Data(_) => "data",
            Error::Warc(_) => "warc",
            Error::Path { .. } | Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
