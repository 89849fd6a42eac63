//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a function.
    #[error("{func}: domain error: {msg}")]
    Domain { func: &'static str, msg: String },

    /// A series or continued fraction hit its term cap before meeting the
    /// requested tolerance.
    #[error("{func}: failed to converge within {max_terms} terms")]
    Convergence {
        func: &'static str,
        max_terms: usize,
    },

    /// Argument is mathematically valid but outside the supported range.
    #[error("{func}: out of supported range: {msg}")]
    Range { func: &'static str, msg: String },

    /// Adaptive quadrature could not reach the requested error target.
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    /// A caller-facing precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Matrix or batch dimensions do not line up.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Backward pass invoked without a matching forward record.
    #[error("no matching forward record: {0}")]
    State(String),

    /// Training objective became non-finite.
    #[error("training diverged: {0}")]
    Diverged(String),

    /// A grid-based report was asked for with too few points.
    #[error("insufficient grid: need at least {need} points, got {got}")]
    InsufficientGrid { need: usize, got: usize },

    /// Malformed run configuration or data file.
    #[error("invalid configuration: {0}")]
    Config(String),
}
