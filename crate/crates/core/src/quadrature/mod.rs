//! Finite-part and principal-value quadrature, and the spiral kernel
//! integrals whose closed forms define the coefficients.

mod interval;
mod lattice;
mod spiral;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiralError};
use crate::numerics::{cexpm1, C64};

pub use interval::{
    fp_integral, fp_via_parts, integrate_regular, pv_curve_integral, pv_integral, Estimate, FpEstimate,
};
pub use lattice::PoleLattice;
pub use spiral::{
    kernel_tail_transform, kernel_tail_transform_row, verify_a_pv_integral, verify_k_integral,
    verify_mode_integral, mode_integral_closed, mode_integral_residue_form, IdentityCheck, SpiralIntegrals, TailMode,
    TAIL_START,
};

/// Numerical controls shared by every integral in the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Strictly decreasing excision radii for the finite-part limit.
    pub eps_schedule: Vec<f64>,
    /// Gauss–Legendre points per panel.
    pub panel_points: usize,
    /// Truncation radius for real-line integrals; `None` means 40/a.
    pub tail_radius: Option<f64>,
    /// Number of odd-power Richardson levels applied to the ε-sequence.
    pub extrapolation_order: usize,
    pub tol: f64,
    /// Upper bound on panel width for regular pieces.
    pub max_panel_width: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            eps_schedule: (4..=20).map(|k| 2f64.powi(-k)).collect(),
            panel_points: 32,
            tail_radius: None,
            extrapolation_order: 2,
            tol: 1e-8,
            max_panel_width: 1.0,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.eps_schedule.len() < 2 {
            return Err(SpiralError::InvalidParameter("eps_schedule needs at least two entries".into()));
        }
        if self.eps_schedule.iter().any(|e| !(*e > 0.0)) || self.eps_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(SpiralError::InvalidParameter("eps_schedule must be positive and strictly decreasing".into()));
        }
        if let Some(r) = self.tail_radius {
            if !(r > 0.0) {
                return Err(SpiralError::InvalidParameter(format!("tail radius {r} must be positive")));
            }
        }
        if self.panel_points < 2 || !(self.tol > 0.0) || !(self.max_panel_width > 0.0) {
            return Err(SpiralError::InvalidParameter("panel_points >= 2, tol > 0 and panel width > 0 required".into()));
        }
        Ok(())
    }

    pub fn radius_for(&self, a: f64) -> f64 {
        self.tail_radius.unwrap_or(40.0 / a)
    }

    pub fn with_radius(&self, r: f64) -> Self {
        Self { tail_radius: Some(r), ..self.clone() }
    }
}

type RealToComplex<'a> = Box<dyn Fn(f64) -> C64 + Send + Sync + 'a>;
type Chord<'a> = Box<dyn Fn(f64, f64) -> C64 + Send + Sync + 'a>;

/// A smooth parametrised curve γ with γ′ ≠ 0.
pub struct Curve<'a> {
    pub gamma: RealToComplex<'a>,
    pub dgamma: RealToComplex<'a>,
    /// Optional cancellation-free γ(t) − γ(x).
    pub chord: Option<Chord<'a>>,
    pub description: String,
}

impl std::fmt::Debug for Curve<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Curve").field("description", &self.description).finish()
    }
}

impl<'a> Curve<'a> {
    pub fn new(
        gamma: impl Fn(f64) -> C64 + Send + Sync + 'a,
        dgamma: impl Fn(f64) -> C64 + Send + Sync + 'a,
        description: impl Into<String>,
    ) -> Self {
        Self { gamma: Box::new(gamma), dgamma: Box::new(dgamma), chord: None, description: description.into() }
    }

    /// γ(t) = t.
    pub fn line() -> Curve<'static> {
        Curve {
            gamma: Box::new(|t| C64::new(t, 0.0)),
            dgamma: Box::new(|_| C64::new(1.0, 0.0)),
            chord: Some(Box::new(|t, x| C64::new(t - x, 0.0))),
            description: "gamma(t) = t".into(),
        }
    }

    /// γ(t) = e^{kt + iφ}.
    pub fn exponential(k: C64, phase: f64) -> Curve<'static> {
        let rot = C64::new(phase.cos(), phase.sin());
        Curve {
            gamma: Box::new(move |t| (k * t).exp() * rot),
            dgamma: Box::new(move |t| k * (k * t).exp() * rot),
            chord: Some(Box::new(move |t, x| (k * x).exp() * cexpm1(k * (t - x)) * rot)),
            description: format!("gamma(t) = exp(({k}) t + i {phase})"),
        }
    }

    pub fn chord(&self, t: f64, x: f64) -> C64 {
        match &self.chord {
            Some(ch) => ch(t, x),
            None => (self.gamma)(t) - (self.gamma)(x),
        }
    }

    /// Checks γ′ ≠ 0 at `samples` evenly spaced points of [lo, hi].
    pub fn check_regular(&self, lo: f64, hi: f64, samples: usize) -> Result<()> {
        for i in 0..=samples {
            let t = lo + (hi - lo) * i as f64 / samples as f64;
            if (self.dgamma)(t).norm() < 1e-14 {
                return Err(SpiralError::InvalidParameter(format!("curve derivative vanishes near t = {t}")));
            }
        }
        Ok(())
    }
}
