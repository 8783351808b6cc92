//! Error type shared by every module of the toolkit.

use thiserror::Error;

/// Unified error type.
///
/// Numerical routines distinguish between *caller* mistakes
/// ([`Error::InvalidArgument`], [`Error::Geometry`]) and *runtime* failures of
/// the numerics themselves ([`Error::Numerical`]).  The CLI maps the former to
/// exit code 2 and the latter to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on an argument was violated.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A geometric precondition (grid extent, sampling density, region
    /// overlap) was violated.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// An iterative or series evaluation failed to converge, or lost too much
    /// precision to be trusted.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A requested range does not bracket the feature it must contain.
    #[error("range error: {0}")]
    Range(String),

    /// A design equation has no solution in the admissible interval.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A 1-D minimization terminated on the search boundary instead of an
    /// interior minimum.  The best boundary point is reported so callers can
    /// still inspect it.
    #[error("boundary solution: minimum at edge of search range (b = {b}, value = {value})")]
    BoundarySolution { b: f64, value: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("config error: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
