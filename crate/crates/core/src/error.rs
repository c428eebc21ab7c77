use thiserror::Error;

/// Errors surfaced by the solvers and kernels in this crate.
#[derive(Debug, Error)]
pub enum OtError {
    #[error("mode index {index} out of range for {modes} modes")]
    ModeOutOfRange { index: usize, modes: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "marginal {mode} has a non-positive entry at {index}; positive marginals are required"
    )]
    NonPositiveMarginal { mode: usize, index: usize },

    #[error("density {mode} is not positive definite (min pivot {pivot:.3e}); singular marginals are unsupported")]
    SingularDensity { mode: usize, pivot: f64 },

    #[error("eigenvalue iteration failed to converge after {sweeps} sweeps (off-diagonal {offdiag:.3e})")]
    EigenNonConvergence { sweeps: usize, offdiag: f64 },

    #[error("point outside domain: {0}")]
    DomainViolation(String),

    #[error("linear solve failed: {0}")]
    SingularSystem(String),

    #[error("LP exceeds desk-scale limit: {vars} variables > {limit}")]
    LpTooLarge { vars: usize, limit: usize },

    #[error("LP basis numerically degenerate: {0}")]
    DegenerateBasis(String),

    #[error("kernel exp(-C/eps) underflows to an all-zero {0}; use the log-domain solver or a larger eps")]
    KernelUnderflow(String),

    #[error("iteration budget exhausted: {0}")]
    IterationBudget(String),

    #[error("bound chain violated: {0}")]
    ChainViolation(String),

    #[error("internal assertion failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, OtError>;
