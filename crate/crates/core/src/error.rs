use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size mismatch: expected {expected} entries, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("self-loop at node {node}")]
    SelfLoop { node: usize },

    #[error("edge {{{head},{tail}}} has non-positive or non-finite weight {weight}")]
    InvalidWeight {
        head: usize,
        tail: usize,
        weight: f64,
    },

    #[error("duplicate edge {{{head},{tail}}}")]
    DuplicateEdge { head: usize, tail: usize },

    #[error("node {node} is out of range for a graph with {num_nodes} nodes")]
    NodeOutOfRange { node: usize, num_nodes: usize },

    #[error("node {node} is isolated")]
    IsolatedNode { node: usize },

    #[error("graph has no nodes")]
    EmptyGraph,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("cluster {cluster} is empty")]
    EmptyCluster { cluster: usize },

    #[error("node {node} appears more than once")]
    DuplicateNode { node: usize },

    #[error("training set is empty; every constant signal would be a solution")]
    EmptyTrainingSet,

    #[error("connected component containing node {node} has no labeled node")]
    UnlabeledComponent { node: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("flow is infeasible: {0}")]
    InfeasibleFlow(String),

    #[error("iteration stopped after {iterations} steps with residual {residual}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("reference optimum is required")]
    MissingReference,

    #[error("true signal has zero norm")]
    ZeroSignal,

    #[error("generator gave up after {attempts} attempts: {reason}")]
    GeneratorExhausted { attempts: usize, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

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

    /// True for errors caused by the input data rather than by the caller.
    pub fn is_data_error(&self) -> bool {
        !matches!(self, Error::InvalidParameter(_))
    }
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::SizeMismatch { expected, actual })
    }
}
