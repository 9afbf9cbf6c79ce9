//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by fiber arithmetic, basis handling, samplers, and
/// estimators.
#[derive(Debug, Error)]
pub enum FiberError {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("integer overflow during {0}")]
    Overflow(&'static str),

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("margin component {row} cannot be met by any nonnegative table")]
    InfeasibleMargin { row: usize },

    #[error(
        "scaling iteration stalled at residual {residual:e} \
         (tolerance {tol:e}, {max_iter} iterations)"
    )]
    NonConvergence {
        residual: f64,
        tol: f64,
        max_iter: usize,
    },

    #[error("expected table has a nonpositive entry at cell {cell}")]
    NonPositiveExpected { cell: usize },

    #[error("step range is unbounded: move has no sign change, so no finite feasible interval")]
    UnboundedRange,

    #[error("random walk stalled: {attempts} consecutive rejected proposals")]
    RejectionStall { attempts: usize },

    #[error("enumeration cap of {cap} points exceeded; at least {seen} points exist")]
    CapExceeded { cap: usize, seen: usize },

    #[error("fiber too large to count by search within a budget of {budget} nodes")]
    TooLarge { budget: u64 },

    #[error("fiber is not bounded in coordinate {col}; refusing to enumerate")]
    Unbounded { col: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, FiberError>;
