//! Error type shared by every solver stage.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not unitary: deviation {residual:.3e} exceeds {tol:.3e}")]
    NonUnitary { residual: f64, tol: f64 },

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:.3e}")]
    NotPositiveDefinite { eigenvalue: f64 },

    #[error("dimension must satisfy 1 <= n <= {max}, got {n}")]
    UnsupportedDimension { n: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("non-finite value produced in {context}")]
    NonFinite { context: &'static str },

    #[error("ODE step size underflow at x = {x:.6e} (step {step:.3e}); potential too rough or non-decaying")]
    StepFailure { x: f64, step: f64 },

    #[error("Jost matrix numerically singular at k = {k:.6e} (cond {cond:.3e})")]
    SingularJostMatrix { k: f64, cond: f64 },

    #[error("bound-state refinement ambiguous near kappa = {kappa:.8e}: {detail}")]
    ClusterAmbiguity { kappa: f64, detail: String },

    #[error("scattering matrix far from its high-energy limit at the grid cutoff (deviation {deviation:.3e}); increase K_max")]
    TailTooLarge { deviation: f64 },

    #[error("Marchenko system near-singular at x = {x:.4} (cond estimate {cond:.3e}); data violates unique solvability")]
    NearSingularSystem { x: f64, cond: f64 },

    #[error("boundary-matrix recovery ill-conditioned at every sampled wavenumber")]
    IllConditionedRecovery,
}

pub type Result<T> = std::result::Result<T, Error>;
