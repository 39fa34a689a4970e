use thiserror::Error;

/// Errors raised by the kernels, quadrature and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected n = {expected}, got n = {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("kernel evaluated at its pole")]
    Pole,

    #[error("finite-difference stencil at {point} touches a declared pole")]
    StencilTouchesPole { point: String },

    #[error("kernel requested at the characteristic point zeta = 0")]
    CharacteristicPoint,

    #[error("point is not on the boundary plane t = 0 (t = {0})")]
    NotOnBoundary(f64),

    #[error("point is not in the open half-space t > 0 (t = {0})")]
    NotInDomain(f64),

    #[error("circular-diagonal singularity: z = {0} is too close to 1")]
    DiagonalSingularity(f64),

    #[error("2F1 argument z = {0} outside [0, 1)")]
    HypergeometricDomain(f64),

    #[error("2F1({a}, {b}; {c}; {z}) did not converge within {terms} terms")]
    HypergeometricNoConvergence {
        a: f64,
        b: f64,
        c: f64,
        z: f64,
        terms: usize,
    },

    #[error("density belongs to rule {found:#x}, not {expected:#x}")]
    RuleMismatch { expected: u64, found: u64 },

    #[error("evaluation point coincides with quadrature node {0}")]
    NodeCoincidence(usize),

    #[error("kernel context is not calibrated")]
    Uncalibrated,

    #[error("compatibility condition violated: integral = {integral:e}, relative residual = {residual:e}")]
    Incompatible { integral: f64, residual: f64 },

    #[error("field `{0}` is not circular")]
    NotCircular(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
