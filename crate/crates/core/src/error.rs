//! Crate-wide error type.

/// Errors surfaced by density operations, numerics, and assignment solvers.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    /// A density whose total weight is zero or non-finite cannot be
    /// normalized or sampled from.
    #[error("degenerate density: {0}")]
    DegenerateDensity(&'static str),

    /// A covariance factorization failed even after the one permitted
    /// jitter retry, or some other numeric invariant broke down.
    #[error("numerical failure: {0}")]
    NumericalFailure(&'static str),

    /// The assignment problem admits no feasible solution (some row has no
    /// finite-cost column left).
    #[error("no feasible assignment")]
    InfeasibleAssignment,

    /// A caller-supplied parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
