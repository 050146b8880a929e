//! Linear instability of M-branch Alexander spiral vortex sheets.
//!
//! The crate computes the coefficient algebra of the oscillatory ansatz, the
//! reduced 2×2 spectrum and its growth exponent δ, verifies the closed-form
//! integral identities behind the coefficients with Hadamard finite-part and
//! principal-value quadrature, and integrates the linearised dynamics.
//!
//! Start with [`SpiralConfig::new`], then [`coefficient_set`] and
//! [`stability_analysis`]. The `examples/` directory has one runnable program
//! per capability.

pub mod coefficients;
pub mod error;
pub mod numerics;
pub mod ode;
pub mod operator;
pub mod quadrature;
pub mod report;
pub mod spiral;
pub mod stability;

pub use coefficients::{coefficient_set, derived_constants, CoefficientSet, DerivedConstants};
pub use error::{Result, SpiralError};
pub use numerics::C64;
pub use spiral::{branch_angles, solve_spiral_parameters, PerturbationWeights, Sign, SpiralConfig};
pub use stability::{stability_analysis, StabilityResult};
