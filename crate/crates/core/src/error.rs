//! Error types shared across the crate.

use crate::network::Design;
use thiserror::Error;

/// Rejected configuration values (lane counts, chunk sizes, topology arity).
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("lane count {0} is not a power of two >= 2")]
    BadLaneCount(usize),
    #[error("chunk size {chunk} must be a power-of-two multiple of kernel width {kernel_w}")]
    BadChunkSize { chunk: usize, kernel_w: usize },
    #[error("thread count must be >= 1")]
    BadThreadCount,
    #[error("{0:?} supports count and latency queries only; its topology is not modeled")]
    UnsupportedTopology(Design),
    #[error("tree arity invalid: {0}")]
    BadTreeArity(String),
}

/// Rejected input data.
#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum ValidationError {
    #[error("input {name} is not sorted in the declared direction: first out-of-order element at offset {offset}")]
    UnsortedInput { name: String, offset: usize },
    #[error("network expects {expected} input values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
}
