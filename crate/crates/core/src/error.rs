use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, field {field}: {message}")]
    Parse {
        row: usize,
        field: usize,
        message: String,
    },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("kernel span {span} (K={k}, d={dilation}) exceeds series length N={n}")]
    Span {
        k: usize,
        dilation: usize,
        span: usize,
        n: usize,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("coherence undefined: {0}")]
    UndefinedCoherence(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a runtime or
    /// numerical failure.
    pub fn is_usage(&self) -> bool {
        !matches!(self, Error::Io { .. } | Error::Numerical(_) | Error::Json(_))
    }
}
