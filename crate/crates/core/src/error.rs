use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The operation is not defined for the given model (wrong boundary, wrong kernel kind).
    #[error("contract violation: {0}")]
    Contract(String),

    /// The request would need more memory or time than the configured caps allow.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The first-order measure has negative mass; `threshold` is the largest
    /// `e^{-4J}` for which it is still a probability vector.
    #[error("first-order measure not a probability at eps={eps:e}: needs eps <= {threshold:e}")]
    Regime { eps: f64, threshold: f64 },

    /// An iterative solve did not reach the requested residual.
    #[error("solver did not converge: residual {residual:e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },

    /// A linear system turned out singular.
    #[error("singular linear system at pivot {0}")]
    Singular(usize),

    /// A checked mathematical inequality or identity failed.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// Two objects that must match (lengths, chains) do not.
    #[error("shape mismatch: {0}")]
    Mismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
