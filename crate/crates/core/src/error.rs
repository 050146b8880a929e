use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpiralError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("constraint is degenerate: |Im h + a Re h| = {denominator:e} (no solution with g != 0)")]
    DegenerateConstraint { denominator: f64 },

    #[error("alpha = {alpha} is within the guard of 1/(2a) = {half}; sinh(pi B+) vanishes there")]
    HalfFrequencySingularity { alpha: f64, half: f64 },

    #[error("argument {z} lies within {guard:e} of a pole of coth/csch")]
    PoleProximity { z: String, guard: f64 },

    #[error("geometric ratio |exp(2 pi B)|^{{±1}} = {ratio} is not < 1 for the requested half-plane")]
    WrongHalfPlane { ratio: f64 },

    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("pole at x = {x} is not strictly inside ({lo}, {hi})")]
    NonInteriorPole { x: f64, lo: f64, hi: f64 },

    #[error("no convergence: best error estimate {estimate:e} exceeds tolerance {tol:e}")]
    NoConvergence { estimate: f64, tol: f64 },

    #[error("compatibility conditions violated: residuals r1 = {r1:e}, r2 = {r2:e}")]
    CompatibilityViolation { r1: f64, r2: f64 },

    #[error("step limit reached: {steps} substeps per output interval without meeting {tol:e}")]
    StepLimit { steps: usize, tol: f64 },

    #[error("fit window [{lo}, {hi}] holds {samples} samples; at least {required} required")]
    WindowTooSmall { lo: f64, hi: f64, samples: usize, required: usize },
}

pub type Result<T> = std::result::Result<T, SpiralError>;
