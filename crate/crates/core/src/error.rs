use serde::Serialize;
use thiserror::Error;

/// Errors produced by the learners, worlds and the experiment harness.
#[derive(Debug, Clone, PartialEq, Error, Serialize)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("no classifier in the class satisfies the constraints")]
    Infeasible,

    #[error("unlabeled draw budget exhausted after {draws} draws (cap {cap})")]
    BudgetExhausted { draws: u64, cap: u64 },

    #[error("adaptive sampling did not stop within {cap} doubling rounds")]
    DoublingCapExceeded { cap: u32 },

    #[error("instance geometry cannot be realized: {0}")]
    InfeasibleGeometry(String),

    #[error("{0} is unavailable in benchmark mode")]
    Unavailable(&'static str),

    #[error("trial panicked: {0}")]
    Panicked(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
