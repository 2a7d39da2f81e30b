use thiserror::Error;

/// Errors surfaced by the numerical routines.
///
/// Most operations are total on their stated domains; errors signal
/// contract violations (bad input) or numerical failures that the caller
/// must see rather than a silently degraded value.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("support size {got} exceeds the exact-solver limit {limit}")]
    SupportTooLarge { got: usize, limit: usize },

    #[error("quadrature did not reach the requested tolerance: {0}")]
    QuadratureFailure(String),

    #[error("root finder failed: {0}")]
    RootFindFailure(String),

    #[error("tabulation does not cover the requested argument: {0}")]
    OutOfRange(String),

    #[error("tabulated radial distance is not strictly increasing")]
    NonMonotoneRho,

    #[error("optimizer failed: {0}")]
    OptimizerFailure(String),

    #[error("solver diagnostics: {0}")]
    Diagnostic(String),
}

pub type Result<T> = std::result::Result<T, Error>;
