use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hurwitz: {0}")]
    NotHurwitz(String),

    #[error("matrix is not symmetric positive definite: {0}")]
    NotSpd(String),

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear program is unbounded along the objective")]
    Unbounded,

    #[error("linear program feasible set is empty")]
    EmptyPolytope,

    #[error("invalid projection bounds: {0}")]
    InvalidBounds(String),

    #[error("design pipeline infeasible at step {step}: {reason}")]
    Infeasible { step: u32, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reference signal violates envelope: {0}")]
    Envelope(String),
}

pub type Result<T> = std::result::Result<T, Error>;
