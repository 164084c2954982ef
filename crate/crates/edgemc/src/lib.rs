//! Edge-state Markov chain Monte Carlo over candidate graphs.
//!
//! Given a data matrix and an undirected candidate graph, the sampler walks
//! over per-edge states (forward, reverse, absent) with a Metropolis-Hastings
//! kernel, repairing directed cycles in each proposal, and reports posterior
//! state frequencies per edge. Exact enumeration oracles, a linear-Gaussian
//! simulator, and evaluation metrics support validation and benchmarking.

pub mod cycles;
pub mod error;
pub mod experiment;
pub mod files;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod sampler;
pub mod score;
pub mod topology;

pub use error::{Error, Result};
pub use graph::{
    AdjacencyMatrix, AllowedStates, CandidateEdge, CandidateGraph, Constraints, EdgeConstraint,
    EdgeState, EdgeStateVector, NodeId,
};
pub use sampler::{ChainState, McmcConfig, PosteriorTable, Prior, Trace};
pub use score::DataMatrix;
