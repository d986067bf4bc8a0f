use thiserror::Error;

/// Error taxonomy for the whole pipeline. Variants map 1:1 onto CLI exit
/// codes, so keep them coarse: what failed, not where.
#[derive(Debug, Error)]
pub enum Error {
    /// Caller passed inconsistent or out-of-range arguments.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A file or byte stream does not match its documented layout.
    #[error("format error: {0}")]
    Format(String),

    /// A numeric routine left its domain (non-convergence, indefinite input,
    /// non-finite intermediate).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// An operation the pipeline deliberately does not provide.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// Candidate search could not produce a winner.
    #[error("search error: {0}")]
    Search(String),

    /// Model fitting (cost model, calibration) failed.
    #[error("fit error: {0}")]
    Fit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub fn unsupported(msg: impl Into<String>) -> Self {
        Error::Unsupported(msg.into())
    }

    pub fn search(msg: impl Into<String>) -> Self {
        Error::Search(msg.into())
    }

    pub fn fit(msg: impl Into<String>) -> Self {
        Error::Fit(msg.into())
    }
}
