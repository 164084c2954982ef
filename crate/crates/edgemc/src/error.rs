//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed graph input: self-loops, duplicate edges, out-of-range nodes,
    /// non-square or non-binary adjacency, and similar structural problems.
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    /// Malformed data matrix: too few rows, ragged columns, non-finite
    /// values, or a constant column.
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Invalid prior: negative entries or probabilities not summing to one.
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    /// Invalid chain or experiment configuration.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// Invalid or unsatisfiable edge constraints.
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    /// Collinear parent columns: the least-squares design has no unique fit.
    #[error("rank-deficient regression for node {node}: collinear parents")]
    RankDeficient { node: usize },

    /// Residual variance below tolerance: the node is perfectly predicted.
    #[error("degenerate residual variance {sigma2:.3e} for node {node}")]
    DegenerateVariance { node: usize, sigma2: f64 },

    /// An enumeration guard (state-space or orientation count) was exceeded.
    #[error("enumeration guard exceeded: {0}")]
    GuardExceeded(String),

    /// Cycle repair could not make progress within the round cap.
    #[error("cycle repair exceeded {rounds} rounds without reaching an acyclic state")]
    RepairOverflow { rounds: usize },

    /// Every edge of a directed cycle is pinned to its current state, so the
    /// cycle cannot be repaired.
    #[error("unsatisfiable repair: every edge of a directed cycle is pinned to its current state")]
    UnsatisfiableRepair,

    /// A transition-probability query targeted a zero-prior state.
    #[error("zero-prior target state {state} for edge {edge}")]
    ZeroPriorTarget { edge: usize, state: u8 },

    /// Malformed text input (graph files, constraint files, config files).
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}
