use thiserror::Error;

pub type Result<T> = std::result::Result<T, KvError>;

#[derive(Debug, Error)]
pub enum KvError {
    #[error("non-finite matrix entry")]
    NonFinite,

    #[error("outside exp(U): {0}")]
    OutsideExpDomain(String),

    #[error("outside V: {0}")]
    OutsideV(String),

    #[error("matrix left the subalgebra (least-squares residual {residual:e})")]
    Closure { residual: f64 },

    #[error("quadrature did not converge (last estimate {estimate:e}, error {error:e})")]
    Quadrature { estimate: f64, error: f64 },

    #[error("invalid Lie algebra: {0}")]
    InvalidAlgebra(String),

    #[error("series is not linear in the auxiliary letter: {0}")]
    NotLinearInA(String),

    #[error("infeasible linear system at degree {degree}: rank {rank}, augmented rank {augmented_rank}, {unknowns} unknowns, {equations} equations")]
    Infeasible {
        degree: usize,
        rank: usize,
        augmented_rank: usize,
        unknowns: usize,
        equations: usize,
    },

    #[error("flow left V at t = {time}: {reason}")]
    DomainExit { time: f64, reason: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
