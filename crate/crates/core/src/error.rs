use std::path::PathBuf;

/// Failures surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("box of {sites} sites exceeds the cap of {cap}")]
    TooManySites { sites: usize, cap: usize },

    #[error("site {0} lies outside the computation box")]
    OutsideBox(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{failed} of {requested} realizations failed")]
    FailureThreshold { failed: usize, requested: usize },

    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
