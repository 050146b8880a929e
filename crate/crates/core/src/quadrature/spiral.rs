//! Real-line integrals of the spiral kernels with the diagonal singularity at
//! σ = 0 and tails regularised by exact subtraction of the terms that cancel
//! in the branch sum.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::interval::{fp_integral, integrate_regular, pv_integral, Estimate};
use super::{Curve, PoleLattice, QuadratureSpec};
use crate::coefficients::{a_kernel_sum, c_mk, three_case};
use crate::error::{Result, SpiralError};
use crate::numerics::{c, cexpm1, csch, inv_one_minus_exp, pairwise_sum, C64, I};
use crate::spiral::{a_constant, ansatz_oscillation, PerturbationWeights, Sign, SpiralConfig, DEFAULT_HALF_GUARD};

/// Beyond this |σ| the right tail uses the transformed (decaying) integrand.
pub const TAIL_START: f64 = 5.0;
/// Half-width of the window around σ = 0 treated as singular.
const CORE: f64 = 1.0;
const COMPAT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailMode {
    /// e^{2aσ}/(1−E)²
    Kernel2a,
    /// e^{(2iα+1)aσ}/(1−E), weighted by X
    ModePlus,
    /// e^{(−2iα+1)aσ}/(1−E), weighted by Y
    ModeMinus,
    /// e^{(a−i)σ−iΔ}/(1−E)
    AKernel,
}

/// Outcome of one numerical identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    pub identity: String,
    #[serde(with = "crate::numerics::complex_json")]
    pub numeric: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub closed: C64,
    pub rel_err: f64,
    pub error_estimate: f64,
}

impl IdentityCheck {
    pub fn new(identity: impl Into<String>, numeric: Estimate, closed: C64) -> Self {
        Self {
            identity: identity.into(),
            numeric: numeric.value,
            closed,
            rel_err: (numeric.value - closed).norm() / closed.norm(),
            error_estimate: numeric.error,
        }
    }
}

/// Integrals over σ ∈ ℝ for one row m of a configuration.
#[derive(Debug, Clone)]
pub struct SpiralIntegrals<'c> {
    cfg: &'c SpiralConfig,
    row: usize,
    spec: QuadratureSpec,
    radius: f64,
}

/// −σ/(e^{zσ} − 1) with its limit −1/z at σ = 0; equals σ/(1 − e^{zσ}).
fn sigma_over_one_minus_exp(z: C64, s: f64) -> C64 {
    if s == 0.0 {
        -1.0 / z
    } else {
        -s / cexpm1(z * s)
    }
}

impl<'c> SpiralIntegrals<'c> {
    pub fn new(cfg: &'c SpiralConfig, row: usize, spec: &QuadratureSpec) -> Result<Self> {
        spec.validate()?;
        if row >= cfg.branches {
            return Err(SpiralError::InvalidParameter(format!("row {row} out of range for M = {}", cfg.branches)));
        }
        let a = cfg.a;
        let pole = PoleLattice::for_branches(a, cfg.branches, 1).nearest_off_axis_distance();
        let width = spec.max_panel_width.min(1.0).min(1.0 / a).min(pole);
        let radius = spec.radius_for(a);
        Ok(Self { cfg, row, spec: QuadratureSpec { max_panel_width: width, ..spec.clone() }, radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    fn m(&self) -> usize {
        self.cfg.branches
    }

    fn delta(&self, k: usize) -> f64 {
        2.0 * PI * (k as f64 - self.row as f64) / self.m() as f64
    }

    fn z(&self) -> C64 {
        c(self.cfg.a, 1.0)
    }

    /// 1/(1 − e^{(a+i)σ + iΔ_km})
    fn inv1(&self, s: f64, k: usize) -> C64 {
        inv_one_minus_exp(self.z() * s + c(0.0, self.delta(k)))
    }

    fn phase(&self, x: f64) -> C64 {
        c(x.cos(), x.sin())
    }

    fn kernel2a_direct(&self, s: f64, k: usize) -> C64 {
        let u = self.inv1(s, k);
        (2.0 * self.cfg.a * s).exp() * u * u
    }

    /// e^{2aσ}/(1−E)² minus its non-decaying part e^{−2iσ−2iΔ}.
    fn kernel2a_remainder(&self, s: f64, k: usize) -> C64 {
        let d = self.delta(k);
        let u = self.inv1(s, k);
        let e3 = (-self.cfg.a * s).exp() * self.phase(-3.0 * s - 3.0 * d);
        let e2 = self.phase(-2.0 * s - 2.0 * d);
        e3 * (1.0 - u) + e2 * (u * u - u)
    }

    fn mode_exponent(&self, sign: Sign) -> C64 {
        self.cfg.a * c(1.0, 2.0 * sign.value() * self.cfg.alpha)
    }

    fn mode_direct(&self, s: f64, k: usize, sign: Sign) -> C64 {
        (self.mode_exponent(sign) * s).exp() * self.inv1(s, k)
    }

    /// Mode kernel with the two terms removed by the compatibility conditions.
    fn mode_remainder(&self, s: f64, k: usize, sign: Sign) -> C64 {
        let d = self.delta(k);
        let e = (c(-self.cfg.a, 2.0 * sign.value() * self.cfg.alpha * self.cfg.a - 2.0) * s - c(0.0, 2.0 * d)).exp();
        e * self.inv1(s, k)
    }

    fn a_direct(&self, s: f64, k: usize) -> C64 {
        (c(self.cfg.a, -1.0) * s - c(0.0, self.delta(k))).exp() * self.inv1(s, k)
    }

    fn a_remainder(&self, s: f64, k: usize) -> C64 {
        let d = self.delta(k);
        let e3 = (-self.cfg.a * s).exp() * self.phase(-3.0 * s - 3.0 * d);
        e3 * (self.inv1(s, k) - 1.0)
    }

    /// Assembles [−R, −c] ∪ [−c, c] ∪ [c, T] ∪ [T, R]: direct sums away from
    /// the singular window, the caller's singular treatment of the diagonal
    /// term inside it, and the transformed integrand beyond T.
    fn assemble(
        &self,
        direct: impl Fn(f64, usize) -> C64,
        tail: impl Fn(f64) -> C64,
        singular: impl FnOnce(f64, &QuadratureSpec) -> Result<Estimate>,
    ) -> Result<Estimate> {
        let r = self.radius;
        let core = CORE.min(0.5 * r);
        let t0 = TAIL_START.min(r).max(core);
        let m = self.m();
        let all = |s: f64| pairwise_sum(&(0..m).map(|k| direct(s, k)).collect::<Vec<_>>());
        let others = |s: f64| {
            pairwise_sum(&(0..m).filter(|&k| k != self.row).map(|k| direct(s, k)).collect::<Vec<_>>())
        };
        let spec = &self.spec;
        let pieces = [
            integrate_regular(all, -r, -core, spec)?,
            integrate_regular(others, -core, core, spec)?,
            singular(core, spec)?,
            integrate_regular(all, core, t0, spec)?,
            integrate_regular(&tail, t0, r, spec)?,
        ];
        Ok(Estimate {
            value: pairwise_sum(&pieces.iter().map(|p| p.value).collect::<Vec<_>>()),
            error: pieces.iter().map(|p| p.error).sum(),
        })
    }

    fn exp_curve(&self) -> Curve<'static> {
        // 1 − e^{(a+i)σ} = −(γ(σ) − γ(0)); the square removes the sign.
        Curve::exponential(self.z(), 0.0)
    }

    /// f.p.∫ Σ_k e^{2aσ}/(1 − e^{(a+i)σ+iΔ_km})² dσ.
    pub fn k_fp(&self) -> Result<Estimate> {
        let a = self.cfg.a;
        let curve = self.exp_curve();
        self.assemble(
            |s, k| self.kernel2a_direct(s, k),
            |s| pairwise_sum(&(0..self.m()).map(|k| self.kernel2a_remainder(s, k)).collect::<Vec<_>>()),
            |core, spec| {
                let fp = fp_integral(|s| c((2.0 * a * s).exp(), 0.0), &curve, 0.0, (-core, core), spec)?;
                Ok(Estimate { value: fp.value, error: fp.error })
            },
        )
    }

    /// p.v.∫ Σ_k W_k e^{(±2iα+1)aσ}/(1 − E_k) dσ; tails use the compatibility
    /// conditions, which are checked here.
    pub fn mode_pv(&self, sign: Sign, w: &[C64]) -> Result<Estimate> {
        check_weight_compat(w)?;
        let b = self.mode_exponent(sign);
        let z = self.z();
        let wm = w[self.row];
        self.assemble(
            |s, k| w[k] * self.mode_direct(s, k, sign),
            |s| pairwise_sum(&(0..self.m()).map(|k| w[k] * self.mode_remainder(s, k, sign)).collect::<Vec<_>>()),
            |core, spec| pv_integral(|s| wm * (b * s).exp() * sigma_over_one_minus_exp(z, s), 0.0, (-core, core), spec),
        )
    }

    /// p.v.∫ Σ_k e^{(a−i)σ−iΔ_km}/(1 − E_k) dσ.
    pub fn a_pv(&self) -> Result<Estimate> {
        let z = self.z();
        let am = c(self.cfg.a, -1.0);
        self.assemble(
            |s, k| self.a_direct(s, k),
            |s| pairwise_sum(&(0..self.m()).map(|k| self.a_remainder(s, k)).collect::<Vec<_>>()),
            |core, spec| pv_integral(|s| (am * s).exp() * sigma_over_one_minus_exp(z, s), 0.0, (-core, core), spec),
        )
    }

    /// ζ_k(σ+θ+Δ_km) e^{−2iθ} for the ansatz with amplitudes (X, Y) at time t.
    fn shifted_perturbation(&self, weights: &PerturbationWeights, s: f64, k: usize, theta: f64, t: f64) -> C64 {
        let zp = ansatz_oscillation(self.cfg, self.row, s + theta, t, Sign::Plus);
        let zm = ansatz_oscillation(self.cfg, self.row, s + theta, t, Sign::Minus);
        (weights.x[k] * zp + weights.y[k] * zm) * self.phase(s - theta + self.delta(k))
    }

    /// f.p.∫ Σ_k ζ_k(σ+θ+Δ_km) e^{2aσ} e^{−2iθ}/(1 − E_k)² dσ, without the
    /// ag/(πi) prefactor.
    pub fn j_fp(&self, weights: &PerturbationWeights, theta: f64, t: f64) -> Result<Estimate> {
        if weights.len() != self.m() {
            return Err(SpiralError::LengthMismatch { expected: self.m(), got: weights.len() });
        }
        weights.require_compatible(COMPAT_TOL)?;
        let a = self.cfg.a;
        let curve = self.exp_curve();
        let row = self.row;
        self.assemble(
            |s, k| self.shifted_perturbation(weights, s, k, theta, t) * self.kernel2a_direct(s, k),
            |s| {
                pairwise_sum(
                    &(0..self.m())
                        .map(|k| self.shifted_perturbation(weights, s, k, theta, t) * self.kernel2a_remainder(s, k))
                        .collect::<Vec<_>>(),
                )
            },
            |core, spec| {
                let f = |s: f64| self.shifted_perturbation(weights, s, row, theta, t) * (2.0 * a * s).exp();
                let fp = fp_integral(f, &curve, 0.0, (-core, core), spec)?;
                Ok(Estimate { value: fp.value, error: fp.error })
            },
        )
    }

    /// Transformed k-summed integrand at σ (intended for σ ≥ the tail start).
    pub fn tail(&self, mode: TailMode, weights: Option<&[C64]>, s: f64) -> Result<C64> {
        let m = self.m();
        let v: Vec<C64> = match mode {
            TailMode::Kernel2a => (0..m).map(|k| self.kernel2a_remainder(s, k)).collect(),
            TailMode::AKernel => (0..m).map(|k| self.a_remainder(s, k)).collect(),
            TailMode::ModePlus | TailMode::ModeMinus => {
                let sign = if mode == TailMode::ModePlus { Sign::Plus } else { Sign::Minus };
                let w = weights.ok_or_else(|| SpiralError::InvalidParameter("mode tails need weights".into()))?;
                check_weight_compat(w)?;
                (0..m).map(|k| w[k] * self.mode_remainder(s, k, sign)).collect()
            }
        };
        Ok(pairwise_sum(&v))
    }

    /// Untransformed k-summed integrand at σ, for comparison.
    pub fn direct(&self, mode: TailMode, weights: Option<&[C64]>, s: f64) -> C64 {
        let m = self.m();
        let one = vec![c(1.0, 0.0); m];
        let w = weights.unwrap_or(&one);
        let v: Vec<C64> = match mode {
            TailMode::Kernel2a => (0..m).map(|k| self.kernel2a_direct(s, k)).collect(),
            TailMode::AKernel => (0..m).map(|k| self.a_direct(s, k)).collect(),
            TailMode::ModePlus => (0..m).map(|k| w[k] * self.mode_direct(s, k, Sign::Plus)).collect(),
            TailMode::ModeMinus => (0..m).map(|k| w[k] * self.mode_direct(s, k, Sign::Minus)).collect(),
        };
        pairwise_sum(&v)
    }
}

fn check_weight_compat(w: &[C64]) -> Result<()> {
    let m = w.len();
    let p = PerturbationWeights::new(w.to_vec(), vec![c(0.0, 0.0); m])?;
    p.require_compatible(COMPAT_TOL)
}

/// Transformed kernel sum for row 0.
pub fn kernel_tail_transform(
    cfg: &SpiralConfig,
    weights: Option<&PerturbationWeights>,
    mode: TailMode,
    sigma: f64,
) -> Result<C64> {
    kernel_tail_transform_row(cfg, weights, mode, sigma, 0)
}

/// Transformed kernel sum for row m. Mode kernels use X for the plus sign
/// and Y for the minus sign.
pub fn kernel_tail_transform_row(
    cfg: &SpiralConfig,
    weights: Option<&PerturbationWeights>,
    mode: TailMode,
    sigma: f64,
    row: usize,
) -> Result<C64> {
    let ints = SpiralIntegrals::new(cfg, row, &QuadratureSpec::default())?;
    let w = weights.map(|w| match mode {
        TailMode::ModeMinus => w.y.as_slice(),
        _ => w.x.as_slice(),
    });
    if let Some(p) = weights {
        if p.len() != cfg.branches {
            return Err(SpiralError::LengthMismatch { expected: cfg.branches, got: p.len() });
        }
    }
    ints.tail(mode, w, sigma)
}

/// Numeric f.p. integral against πi c₀/(ag).
pub fn verify_k_integral(cfg: &SpiralConfig, spec: &QuadratureSpec) -> Result<IdentityCheck> {
    let numeric = SpiralIntegrals::new(cfg, 0, spec)?.k_fp()?;
    let closed = PI * I * crate::coefficients::c0(cfg)? / (cfg.a * cfg.g);
    Ok(IdentityCheck::new("K finite-part integral", numeric, closed))
}

/// Closed form −(πi/a²)(a+i)/(±2iα+1)·Σ_k W_k c_mk^± of the mode integral.
pub fn mode_integral_closed(cfg: &SpiralConfig, sign: Sign, w: &[C64], row: usize) -> Result<C64> {
    let cm = c_mk(cfg, sign, DEFAULT_HALF_GUARD)?;
    let s = pairwise_sum(&w.iter().zip(&cm[row]).map(|(x, y)| x * y).collect::<Vec<_>>());
    let a = cfg.a;
    Ok(-(PI * I / (a * a)) * c(a, 1.0) / c(1.0, 2.0 * sign.value() * cfg.alpha) * s)
}

/// Residue form −πi/((a+i) sinh πB)·Σ_k W_k ℬ_mk, independent of c_mk.
pub fn mode_integral_residue_form(cfg: &SpiralConfig, sign: Sign, w: &[C64], row: usize) -> Result<C64> {
    let b = crate::coefficients::b_constant(cfg.a, cfg.alpha, sign);
    let m = cfg.branches;
    let s = pairwise_sum(&(0..m).map(|k| w[k] * three_case(b, m, k as i64 - row as i64)).collect::<Vec<_>>());
    Ok(-PI * I / c(cfg.a, 1.0) * csch(PI * b)? * s)
}

/// Mode integral for the weights X (plus) or Y (minus) against its closed form.
pub fn verify_mode_integral(
    cfg: &SpiralConfig,
    sign: Sign,
    weights: &PerturbationWeights,
    spec: &QuadratureSpec,
) -> Result<IdentityCheck> {
    if weights.len() != cfg.branches {
        return Err(SpiralError::LengthMismatch { expected: cfg.branches, got: weights.len() });
    }
    weights.require_compatible(COMPAT_TOL)?;
    let w = match sign {
        Sign::Plus => &weights.x,
        Sign::Minus => &weights.y,
    };
    let closed = mode_integral_closed(cfg, sign, w, 0)?;
    let numeric = SpiralIntegrals::new(cfg, 0, spec)?.mode_pv(sign, w)?;
    Ok(IdentityCheck::new(format!("mode integral ({})", sign.label()), numeric, closed))
}

/// A-kernel p.v. integral against −(a+i)⁻¹ πi/sinh(πA)·Σ_k 𝒜_mk.
pub fn verify_a_pv_integral(cfg: &SpiralConfig, spec: &QuadratureSpec) -> Result<IdentityCheck> {
    let numeric = SpiralIntegrals::new(cfg, 0, spec)?.a_pv()?;
    let a_c = a_constant(cfg.a);
    let closed = -(PI * I) / c(cfg.a, 1.0) * csch(PI * a_c)? * a_kernel_sum(cfg.a, cfg.branches, 0)?;
    Ok(IdentityCheck::new("A-kernel principal value", numeric, closed))
}
