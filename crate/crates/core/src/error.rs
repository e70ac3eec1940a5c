use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Parameter validation failed (sign constraints, `sigma*tau < 1`, `1 + alpha*beta > 0`).
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// An input lies outside the admissible domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A transform was evaluated too close to the support of its measure.
    #[error("evaluation point too close to the support")]
    NearSupport,

    /// The closed-form transform was evaluated exactly at a pole.
    #[error("transform evaluated at a pole")]
    PoleHit,

    /// Total mass of a reconstructed measure strayed too far from 1.
    #[error("measure mass defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    MassDefect { defect: f64, tolerance: f64 },

    /// The tridiagonal eigensolver hit its iteration cap.
    #[error("tridiagonal eigensolver failed to converge")]
    EigenFailure,

    /// The bridge-density normalizing constant underflowed.
    #[error("bridge density normalization underflowed")]
    BridgeDensityZero,

    /// A condition the construction guarantees was violated numerically.
    #[error("internal consistency violation: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
