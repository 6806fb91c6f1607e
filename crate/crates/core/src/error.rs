use num_complex::Complex64;
use thiserror::Error;

/// Errors raised by the numerical core and the model solvers.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SpectralError {
    #[error("step size underflow at t = {t} (h = {h:e}); singular point inside the span?")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("step limit of {limit} exceeded at t = {t}")]
    StepLimitExceeded { t: f64, limit: usize },
    #[error("invalid integration problem: {0}")]
    InvalidProblem(String),

    #[error("no convergence after {iterations} iterations (last point {last}, step {step:e})")]
    NoConvergence {
        iterations: usize,
        last: Complex64,
        step: f64,
    },
    #[error("derivative vanished at {at}; possible double root")]
    DerivativeVanished { at: Complex64 },
    #[error("singular Jacobian at z = {z}, p = {p}")]
    SingularJacobian { z: Complex64, p: f64 },

    #[error("root on (or too close to) the contour near {near}")]
    RootOnContour { near: Complex64 },
    #[error("insufficient contour sampling: phase jump {jump:.3} rad between {from} and {to}")]
    InsufficientSampling {
        jump: f64,
        from: Complex64,
        to: Complex64,
    },

    #[error("branch {branch_id} lost at parameter {parameter}: {reason}")]
    BranchLost {
        branch_id: usize,
        parameter: f64,
        reason: String,
    },
    #[error(
        "branches {first} and {second} converged to the same root {root} at parameter {parameter}"
    )]
    DuplicateRoot {
        first: usize,
        second: usize,
        root: Complex64,
        parameter: f64,
    },
    #[error("incomplete spectrum: {found} roots found but winding count is {expected} in [{lower}, {upper}]")]
    IncompleteSpectrum {
        found: usize,
        expected: usize,
        lower: Complex64,
        upper: Complex64,
    },

    #[error("degenerate pencil: leading coefficient vanishes")]
    DegeneratePencil,
    #[error("Airy evaluation lost accuracy at z = {z}")]
    AccuracyLoss { z: Complex64 },
    #[error("insufficient spectral depth: {0}")]
    InsufficientDepth(String),
    #[error("grid is not symmetric about the origin")]
    AsymmetricGrid,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("radius r = 0 is excluded; start from a Frobenius seed")]
    RadiusAtZero,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, SpectralError>;
