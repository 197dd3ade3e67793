use thiserror::Error;

/// Failure modes shared by every stage of the pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller passed arguments that violate an operation's contract.
    #[error("usage error: {0}")]
    Usage(String),
    /// Input lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// Requested size exceeds an enforced computational cap.
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    /// Surplus data disagrees with a fitted model.
    #[error("inconsistent data at abscissa {abscissa}: expected {expected}, got {got}")]
    Inconsistent { abscissa: String, expected: String, got: String },
    /// An iterative method failed to meet its stopping rule.
    #[error("no convergence after {iterations} iterations (last change {last_change:e})")]
    Convergence { iterations: usize, last_change: f64 },
    /// A golden or cross-route check failed.
    #[error("verification mismatch: {0}")]
    Verification(String),
    /// An internal invariant broke; indicates a bug upstream.
    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
