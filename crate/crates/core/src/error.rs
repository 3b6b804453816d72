//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors produced by cost construction, solvers, and verification oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A vector or matrix does not have the expected dimension.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// The quadratic coefficient matrix deviates from symmetry beyond the
    /// symmetry tolerance.
    #[error("matrix is not symmetric: |Q - Q^T| reaches {deviation}")]
    NotSymmetric { deviation: f64 },

    /// A cost that must be convex has a negative eigenvalue beyond tolerance.
    #[error("cost is not positive semidefinite: smallest eigenvalue {eigenvalue}")]
    NotPositiveSemidefinite { eigenvalue: f64 },

    /// An operation over a list of costs or subspaces received no elements.
    #[error("empty {what} list")]
    EmptyList { what: &'static str },

    /// A cost that must attain a finite minimum does not. Every admissible
    /// profile must have finite subset-aggregate minima; diagnostics call this
    /// precondition "Assumption 1".
    #[error("agent {agent}: Assumption 1 violated (cost has no finite minimum)")]
    AssumptionViolated { agent: usize },

    /// An aggregate over the named agents has no finite minimum even though
    /// each summand was accepted individually.
    #[error("aggregate cost over agents {agents:?} has no finite minimum")]
    UnboundedSum { agents: Vec<usize> },

    /// The subset-consistency search exhausted every candidate agent set.
    #[error("no consistent subset")]
    NoConsistentSubset,

    /// A solver or scenario requires an honest majority margin `n > 2t`.
    #[error("need n > 2t: n = {n}, t = {t}")]
    TooFewAgents { n: usize, t: usize },

    /// Grid search found its best value on the search-box boundary, so the
    /// true minimizer may lie outside the box.
    #[error("box too small: best grid point lies on the boundary (dimension {dim})")]
    BoxTooSmall { dim: usize },

    /// Grid search is exhaustive and only supports low dimensions.
    #[error("grid search supports at most {max} dimensions, got {dim}")]
    GridDimTooLarge { dim: usize, max: usize },

    /// A parameter failed validation.
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
