use std::path::PathBuf;

use thiserror::Error;

use crate::fragment::Granularity;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("not a git repository: {0}")]
    RepositoryNotFound(PathBuf),

    #[error("branch `{branch}` not found in {repo}")]
    BranchNotFound { repo: PathBuf, branch: String },

    #[error("git command `{command}` failed: {stderr}")]
    Git { command: String, stderr: String },

    #[error("malformed history bundle manifest {path}: {reason}")]
    MalformedManifest { path: PathBuf, reason: String },

    #[error("bundle blob missing or corrupt: {0}")]
    MissingBlob(PathBuf),

    #[error("invalid glob pattern `{pattern}`: {reason}")]
    InvalidGlob { pattern: String, reason: String },

    #[error("invalid fragment: {0}")]
    InvalidFragment(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "pool ordering violation: commit {order_index} classified after commit {last_indexed} was indexed"
    )]
    OrderingViolation { order_index: u64, last_indexed: u64 },

    #[error("granularity mismatch: pool is {pool:?}, request is {requested:?}")]
    GranularityMismatch {
        pool: Granularity,
        requested: Granularity,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
