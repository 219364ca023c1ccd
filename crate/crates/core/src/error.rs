use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("forecast covariance Q_t is not positive definite at t={t} (after jitter)")]
    SingularForecast { t: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("chain {chain} failed at iteration {iteration} in block `{block}`: {source}")]
    Chain {
        chain: usize,
        iteration: usize,
        block: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: u64,
        reason: String,
    },

    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("inputs do not match: {0}")]
    Mismatch(String),

    #[error("insufficient input: {0}")]
    Insufficient(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
