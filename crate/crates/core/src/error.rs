use thiserror::Error;

use crate::graph::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate edge {src} -> {dst}")]
    DuplicateEdge { src: NodeId, dst: NodeId },

    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),

    #[error("trust {trust} on edge {src} -> {dst} is outside (0, 1]")]
    TrustOutOfRange { src: NodeId, dst: NodeId, trust: f64 },

    #[error("node {node} out of range for a graph with {n_nodes} nodes")]
    NodeOutOfRange { node: usize, n_nodes: usize },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("instance too large: {what} is {size}, limit {limit}")]
    TooLarge { what: &'static str, size: usize, limit: usize },

    #[error("operation requires alpha = 0.5, got {0}")]
    AlphaUnsupported(f64),

    #[error("delta matrix does not match the current rater set")]
    StaleDelta,

    #[error("no non-raters left to select")]
    NoNonRaters,

    #[error("target is infeasible: {0}")]
    InfeasibleTarget(String),

    #[error("no sign change in bracket: {0}")]
    NoRoot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad input rather than by a failed computation.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::NoRoot(_) | Error::StaleDelta | Error::NoNonRaters)
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
