//! Spiral parameters, branch geometry and the oscillatory ansatz.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiralError};
use crate::numerics::{c, coth, pairwise_sum, C64, I};

/// Relative distance to α = 1/(2a) inside which entrywise c_mk^+ is refused.
pub const DEFAULT_HALF_GUARD: f64 = 1e-8;

/// Accepted (normalised) constraint residual for a hand-built config.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Sign of the oscillation exponent in ζ^±.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

/// Parameter bundle (M, a, μ, g, α) on the constraint surface.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiralConfig {
    #[serde(rename = "M")]
    pub branches: usize,
    pub a: f64,
    pub mu: f64,
    pub g: f64,
    pub alpha: f64,
}

/// `A = -2ai/(a+i)`.
pub fn a_constant(a: f64) -> C64 {
    -2.0 * a * I / c(a, 1.0)
}

fn check_basic(m: usize, a: f64) -> Result<()> {
    if m < 3 {
        return Err(SpiralError::InvalidParameter(format!("M = {m}; at least 3 branches required")));
    }
    if !(a > 0.0 && a.is_finite()) {
        return Err(SpiralError::InvalidParameter(format!("a = {a}; must be positive and finite")));
    }
    Ok(())
}

/// Closed-form solve of the complex constraint for (μ, g).
///
/// With h = coth(πA/M) the imaginary part gives μ = −a g Im h and the real
/// part then fixes g.
pub fn solve_spiral_parameters(a: f64, m: usize) -> Result<(f64, f64)> {
    check_basic(m, a)?;
    let h = coth(PI * a_constant(a) / m as f64)?;
    let denom = h.im + a * h.re;
    if denom.abs() < 1e-14 {
        return Err(SpiralError::DegenerateConstraint { denominator: denom.abs() });
    }
    let g = -(a * a + 1.0) / (2.0 * a * denom);
    let mu = -a * g * h.im;
    Ok((mu, g))
}

/// Constraint residual |a²+1−2μ+2aμi + 2a²g coth(πA/M)| divided by the sum of
/// the magnitudes of its terms, so that it measures cancellation quality.
pub fn constraint_residual(m: usize, a: f64, mu: f64, g: f64) -> Result<f64> {
    let (abs, scale) = constraint_parts(m, a, mu, g)?;
    Ok(abs / scale)
}

/// Absolute residual of the constraint.
pub fn constraint_residual_abs(m: usize, a: f64, mu: f64, g: f64) -> Result<f64> {
    Ok(constraint_parts(m, a, mu, g)?.0)
}

fn constraint_parts(m: usize, a: f64, mu: f64, g: f64) -> Result<(f64, f64)> {
    let h = coth(PI * a_constant(a) / m as f64)?;
    let lhs = c(a * a + 1.0 - 2.0 * mu, 2.0 * a * mu);
    let rhs = -2.0 * a * a * g * h;
    let scale = (a * a + 1.0) + 2.0 * mu.abs() + 2.0 * a * mu.abs() + (2.0 * a * a * g * h).norm();
    Ok(((lhs - rhs).norm(), scale))
}

impl SpiralConfig {
    /// Builds a config on the constraint surface by solving for (μ, g).
    pub fn new(m: usize, a: f64, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let (mu, g) = solve_spiral_parameters(a, m)?;
        Ok(Self { branches: m, a, mu, g, alpha })
    }

    /// Builds a config from explicit (μ, g) with range checks only.
    pub fn unchecked(m: usize, a: f64, mu: f64, g: f64, alpha: f64) -> Result<Self> {
        check_basic(m, a)?;
        check_alpha(alpha)?;
        if g == 0.0 || !g.is_finite() || !mu.is_finite() {
            return Err(SpiralError::InvalidParameter(format!("mu = {mu}, g = {g}; g must be nonzero and both finite")));
        }
        Ok(Self { branches: m, a, mu, g, alpha })
    }

    /// Full validation including the constraint residual.
    pub fn validate(&self) -> Result<()> {
        let cfg = Self::unchecked(self.branches, self.a, self.mu, self.g, self.alpha)?;
        let r = cfg.constraint_residual()?;
        if r >= CONSTRAINT_TOL {
            return Err(SpiralError::InvalidParameter(format!("constraint residual {r:e} exceeds {CONSTRAINT_TOL:e}")));
        }
        Ok(())
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Self { alpha, ..*self })
    }

    pub fn constraint_residual(&self) -> Result<f64> {
        constraint_residual(self.branches, self.a, self.mu, self.g)
    }

    pub fn half_frequency(&self) -> f64 {
        0.5 / self.a
    }

    /// True when |α − 1/(2a)| < guard·1/(2a).
    pub fn at_half(&self, guard: f64) -> bool {
        let half = self.half_frequency();
        (self.alpha - half).abs() < guard * half
    }

    pub fn theta(&self, m: usize) -> f64 {
        branch_angle(self.branches, m)
    }

    /// Z_m(θ, t), Γ_m(θ, t) and r = |Z|.
    pub fn spiral_state(&self, m: usize, theta: f64, t: f64) -> (C64, f64, f64) {
        spiral_state(self, m, theta, t)
    }

    /// ζ^±_m(t, θ).
    pub fn oscillation(&self, m: usize, theta: f64, t: f64, sign: Sign) -> C64 {
        ansatz_oscillation(self, m, theta, t, sign)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(SpiralError::InvalidParameter(format!("alpha = {alpha}; must be positive and finite")));
    }
    Ok(())
}

pub fn branch_angle(m_total: usize, m: usize) -> f64 {
    2.0 * PI * (m % m_total) as f64 / m_total as f64
}

/// θ_m = 2πm/M.
pub fn branch_angles(m_total: usize) -> Vec<f64> {
    (0..m_total).map(|m| branch_angle(m_total, m)).collect()
}

/// e^{−ipθ_k}, with the exponent reduced mod M before evaluating.
pub fn root_of_unity(m_total: usize, k: usize, p: i64) -> C64 {
    let n = m_total as i64;
    let idx = (-(p * k as i64)).rem_euclid(n);
    let phase = 2.0 * PI * idx as f64 / n as f64;
    c(phase.cos(), phase.sin())
}

/// Σ_m e^{−ipθ_m}, pairwise summed.
pub fn angle_power_sum(m_total: usize, p: i64) -> C64 {
    let terms: Vec<C64> = (0..m_total).map(|k| root_of_unity(m_total, k, p)).collect();
    pairwise_sum(&terms)
}

pub fn spiral_state(cfg: &SpiralConfig, m: usize, theta: f64, t: f64) -> (C64, f64, f64) {
    let off = theta - cfg.theta(m);
    let r = t.powf(cfg.mu) * (cfg.a * off).exp();
    let z = r * c(theta.cos(), theta.sin());
    let gamma = cfg.g * t.powf(2.0 * cfg.mu - 1.0) * (2.0 * cfg.a * off).exp();
    (z, gamma, r)
}

/// The phase 2a(θ−θ_m) + (2μ−1) ln t = ln(Γ_m/g).
pub fn log_circulation(cfg: &SpiralConfig, m: usize, theta: f64, t: f64) -> f64 {
    2.0 * cfg.a * (theta - cfg.theta(m)) + (2.0 * cfg.mu - 1.0) * t.ln()
}

/// ζ^±_m = exp(±iα ln(Γ_m/g)).
pub fn ansatz_oscillation(cfg: &SpiralConfig, m: usize, theta: f64, t: f64, sign: Sign) -> C64 {
    let phase = sign.value() * cfg.alpha * log_circulation(cfg, m, theta, t);
    c(phase.cos(), phase.sin())
}

/// ζ_m = X_m ζ^+ e^{iθ} + Y_m ζ^- e^{iθ}.
pub fn perturbation_value(cfg: &SpiralConfig, x: C64, y: C64, m: usize, theta: f64, t: f64) -> C64 {
    let e = c(theta.cos(), theta.sin());
    (x * ansatz_oscillation(cfg, m, theta, t, Sign::Plus) + y * ansatz_oscillation(cfg, m, theta, t, Sign::Minus)) * e
}

/// Amplitudes X_m, Y_m with their compatibility residuals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationWeights {
    #[serde(with = "crate::numerics::complex_json::vec")]
    pub x: Vec<C64>,
    #[serde(with = "crate::numerics::complex_json::vec")]
    pub y: Vec<C64>,
    pub r1: f64,
    pub r2: f64,
    pub valid: bool,
}

pub const COMPATIBILITY_TOL: f64 = 1e-12;

impl PerturbationWeights {
    pub fn new(x: Vec<C64>, y: Vec<C64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(SpiralError::LengthMismatch { expected: x.len(), got: y.len() });
        }
        if x.len() < 3 {
            return Err(SpiralError::InvalidParameter(format!("{} branches; at least 3 required", x.len())));
        }
        let (r1, r2) = residuals(&x, &y);
        let valid = r1 < COMPATIBILITY_TOL && r2 < COMPATIBILITY_TOL;
        Ok(Self { x, y, r1, r2, valid })
    }

    /// X_m = x0, Y_m = y0 on every branch.
    pub fn symmetric(m: usize, x0: C64, y0: C64) -> Self {
        Self::new(vec![x0; m], vec![y0; m]).expect("symmetric weights are well formed")
    }

    /// X_m = e^{ilθ_m}, Y_m = e^{−ilθ_m}.
    pub fn fourier(m: usize, l: i64) -> Self {
        let x = (0..m).map(|k| root_of_unity(m, k, -l)).collect();
        let y = (0..m).map(|k| root_of_unity(m, k, l)).collect();
        Self::new(x, y).expect("fourier weights are well formed")
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn scaled(&self, sx: C64, sy: C64) -> Self {
        Self::new(self.x.iter().map(|v| v * sx).collect(), self.y.iter().map(|v| v * sy).collect())
            .expect("scaling preserves lengths")
    }

    /// Errors unless both residuals are below `tol`.
    pub fn require_compatible(&self, tol: f64) -> Result<()> {
        if self.r1 < tol && self.r2 < tol {
            Ok(())
        } else {
            Err(SpiralError::CompatibilityViolation { r1: self.r1, r2: self.r2 })
        }
    }
}

fn weighted_sum(w: &[C64], p: i64) -> C64 {
    let m = w.len();
    let terms: Vec<C64> = w.iter().enumerate().map(|(k, v)| v * root_of_unity(m, k, p)).collect();
    pairwise_sum(&terms)
}

fn residuals(x: &[C64], y: &[C64]) -> (f64, f64) {
    let r1 = weighted_sum(x, 1).norm() + weighted_sum(y, 1).norm();
    let r2 = weighted_sum(x, 2).norm() + weighted_sum(y, 2).norm();
    (r1, r2)
}

/// (r₁, r₂) for weights on M branches.
pub fn check_compatibility(weights: &PerturbationWeights, m: usize) -> Result<(f64, f64)> {
    for v in [&weights.x, &weights.y] {
        if v.len() != m {
            return Err(SpiralError::LengthMismatch { expected: m, got: v.len() });
        }
    }
    Ok(residuals(&weights.x, &weights.y))
}
