use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: u64 },

    #[error("line {line}: duplicate edge ({u}, {v}), first seen on line {first_line}")]
    DuplicateEdge {
        line: usize,
        u: u64,
        v: u64,
        first_line: usize,
    },

    #[error(
        "graph is disconnected: {components} components; vertex {unreachable} is not reachable from vertex 0"
    )]
    Disconnected { components: usize, unreachable: usize },

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid demand: {0}")]
    InvalidDemand(String),

    #[error("dense oracle cap exceeded: size {size} > cap {cap}")]
    CapExceeded { size: usize, cap: usize },

    #[error(
        "laplacian solver did not converge in {iterations} iterations (relative residual {residual:e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("multiplicative weight for edge {edge} became nonpositive ({value:e})")]
    WidthViolation { edge: usize, value: f64 },

    #[error("restart budget exhausted after {restarts} restarts (alpha = {alpha})")]
    RestartBudgetExhausted { restarts: usize, alpha: f64 },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("graph hash mismatch: file was built for {expected}, graph is {found}")]
    GraphMismatch { expected: String, found: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
