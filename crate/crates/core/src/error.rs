use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size must be even and at least 16, got {0}")]
    InvalidGrid(usize),

    #[error("{what} = {value} outside of {domain}")]
    OutOfDomain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("u has {got} samples but the grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("non-finite conformal factor sample at node {0}")]
    NonFinite(usize),

    #[error("flow diverged at t = {t}: max |u| = {max_abs}")]
    Diverged { t: f64, max_abs: f64 },

    #[error("invalid flow configuration: {0}")]
    InvalidConfig(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("area {0} is not on the recorded a-grid")]
    MissingArea(f64),

    #[error("time {t} is not strictly inside the saved range [{first}, {last}]")]
    TimeOutOfRange { t: f64, first: f64, last: f64 },

    #[error("{0}")]
    Vacuous(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: f64, domain: impl Into<String>) -> Self {
        Error::OutOfDomain {
            what,
            value,
            domain: domain.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
