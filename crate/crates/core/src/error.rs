use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("user {user} offloads with zero transmit power")]
    ZeroPower { user: usize },

    #[error("user {user} offloads with a non-positive rate ({rate})")]
    ZeroRate { user: usize, rate: f64 },

    #[error("user {user} offloads with no computation resource")]
    ZeroCompute { user: usize },

    #[error("transmit power must be positive, got {0}")]
    PowerDomain(f64),

    #[error("computation allocation must be positive, got {0}")]
    ComputeDomain(f64),

    #[error("inconsistent solution: {0}")]
    Inconsistent(String),

    #[error("server {server} has {users} associated users but only {subchannels} subchannels")]
    TooManyUsers {
        server: usize,
        users: usize,
        subchannels: usize,
    },

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}
