use thiserror::Error;

/// Errors raised by the numeric kernel and the model catalog.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point outside the domain of {what}")]
    Domain { what: String },

    #[error("non-finite value produced by {what}")]
    NonFinite { what: String },

    #[error("point lies on the seam (|mu| = {mu:e}); use a one-sided jacobian")]
    SeamPoint { mu: f64 },

    #[error(
        "difference stencil straddles the seam in coordinate {coord}; use a one-sided jacobian"
    )]
    SeamStraddle { coord: usize },

    #[error("rank deficiency: smallest singular value {sigma_min:e} below tolerance {tol:e}")]
    RankDeficient { sigma_min: f64, tol: f64 },

    #[error("inner solve of the implicit midpoint step diverged at step {step}")]
    NewtonDivergence { step: usize },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NonConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("trajectory left the domain at step {step}")]
    DomainExit { step: usize },

    #[error("region violation: {0}")]
    Region(String),

    #[error("logarithm of zero in {0}")]
    LogOfZero(String),

    #[error("period matrix is singular at the requested base point")]
    SingularPeriodMatrix,

    #[error("one-form is not closed (curl {curl:e})")]
    NotClosed { curl: f64 },

    #[error("group element kind {got} does not act on model {model}")]
    KindMismatch { model: String, got: String },

    #[error("planes are not transverse (eigenvalue within {gap:e} of 1)")]
    NonTransverse { gap: f64 },

    #[error("frame is not Lagrangian (residual {residual:e})")]
    NonLagrangian { residual: f64 },

    #[error("h is frame dependent (discrepancy {discrepancy:e})")]
    FrameDependence { discrepancy: f64 },

    #[error("too few fixed samples: {found} (need at least {needed})")]
    TooFewFixedSamples { found: usize, needed: usize },

    #[error("continuation failed: {0}")]
    Continuation(String),

    #[error("monodromy entries are not integral (residual {residual:e})")]
    NonInteger { residual: f64 },

    #[error("incomplete fibre coverage: {0}")]
    Coverage(String),

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown suite `{0}`")]
    UnknownSuite(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

impl From<std::io::Error> for GeomError {
    fn from(e: std::io::Error) -> Self {
        GeomError::Io(e.to_string())
    }
}
