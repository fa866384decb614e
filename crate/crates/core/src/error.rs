use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Mismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("polynomial degree {degree} exceeds the maximum {max}")]
    DegreeOverflow { degree: u32, max: u32 },
    #[error("missing growth constants: {0}")]
    MissingConstants(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(
        "Picard iteration did not converge after {iterations} map evaluations \
         (last update {last_update:e}{})",
        if *diverging { ", iterate left the ball" } else { "" }
    )]
    NotConverged {
        iterations: usize,
        last_update: f64,
        diverging: bool,
    },
    #[error("smallness hypothesis fails: {0}")]
    Smallness(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
