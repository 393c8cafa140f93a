use alloc::string::String;

/// Errors produced by the core crate.
///
/// Variants are grouped the way the command-line driver maps them to exit
/// codes: capacity limits, numeric non-convergence, and everything else.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("capacity exceeded: {what} is {got}, limit is {limit}")]
    Capacity {
        what: &'static str,
        got: usize,
        limit: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index {index} is not in the index set")]
    NotSubset { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("coordinate {index} has modulus {modulus:e}, below the hyperplane floor {floor:e}")]
    HyperplaneProximity {
        index: usize,
        modulus: f64,
        floor: f64,
    },

    #[error("degenerate covariance matrix: {0}")]
    Degenerate(String),

    #[error("series error: {0}")]
    Series(String),

    #[error("grammar error: {0}")]
    Grammar(String),

    #[error("no objects of size {n}: {what}")]
    Empty { what: &'static str, n: usize },

    #[error("insufficient truncation order: need {needed}, have {have}")]
    InsufficientOrder { needed: usize, have: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
