//! Spot checks of the linearised operators 𝒦, 𝒥 and ℋ = 𝒦 − 𝒥 on the
//! oscillatory ansatz, and the residual of the full linearised equation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::coefficients::{c0, coefficient_set, CoefficientSet};
use crate::error::{Result, SpiralError};
use crate::numerics::{c, pairwise_sum, C64, I};
use crate::quadrature::{QuadratureSpec, SpiralIntegrals};
use crate::spiral::{perturbation_value, PerturbationWeights, Sign, SpiralConfig};

const COMPAT_TOL: f64 = 1e-10;
/// Relative step for central differences in t.
const DIFF_STEP: f64 = 1e-5;

/// X_m(t), Y_m(t) frozen at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzPerturbation {
    pub config: SpiralConfig,
    pub weights: PerturbationWeights,
    pub t: f64,
}

impl AnsatzPerturbation {
    pub fn new(config: SpiralConfig, weights: PerturbationWeights, t: f64) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.branches {
            return Err(SpiralError::LengthMismatch { expected: config.branches, got: weights.len() });
        }
        if !(t > 0.0 && t.is_finite()) {
            return Err(SpiralError::InvalidParameter(format!("t = {t}; must be positive")));
        }
        Ok(Self { config, weights, t })
    }

    /// ζ_m(t, θ).
    pub fn zeta(&self, m: usize, theta: f64) -> C64 {
        perturbation_value(&self.config, self.weights.x[m], self.weights.y[m], m, theta, self.t)
    }

    fn check_row(&self, m: usize) -> Result<()> {
        if m >= self.config.branches {
            return Err(SpiralError::InvalidParameter(format!("branch {m} out of range")));
        }
        Ok(())
    }
}

/// Numeric operator value against its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorValue {
    #[serde(with = "crate::numerics::complex_json")]
    pub numeric: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub closed: C64,
    pub rel_err: f64,
    pub error_estimate: f64,
}

impl OperatorValue {
    fn new(numeric: C64, closed: C64, error_estimate: f64) -> Self {
        let rel_err = if closed.norm() > 0.0 {
            (numeric - closed).norm() / closed.norm()
        } else {
            (numeric - closed).norm()
        };
        Self { numeric, closed, rel_err, error_estimate }
    }
}

fn prefactor(cfg: &SpiralConfig) -> C64 {
    cfg.a * cfg.g / (PI * I)
}

fn unit(x: f64) -> C64 {
    c(x.cos(), x.sin())
}

/// 𝒦_m ζ(θ) = (ag/πi)·f.p.∫ Σ_k ζ_m(θ) e^{2aσ} e^{−2iθ}/(1 − E_k)² dσ.
#[allow(non_snake_case)]
pub fn apply_K_numeric(pert: &AnsatzPerturbation, m: usize, theta: f64, spec: &QuadratureSpec) -> Result<OperatorValue> {
    pert.check_row(m)?;
    let cfg = &pert.config;
    let fp = SpiralIntegrals::new(cfg, m, spec)?.k_fp()?;
    let factor = pert.zeta(m, theta) * unit(-2.0 * theta);
    let pf = prefactor(cfg);
    Ok(OperatorValue::new(pf * factor * fp.value, c0(cfg)? * factor, (pf * factor).norm() * fp.error))
}

/// ζ⁺_m e^{−iθ} g Σ X_k c⁺_mk + ζ⁻_m e^{−iθ} g Σ Y_k c⁻_mk.
#[allow(non_snake_case)]
pub fn J_closed_form(pert: &AnsatzPerturbation, coeffs: &CoefficientSet, m: usize, theta: f64) -> Result<C64> {
    pert.check_row(m)?;
    let cfg = &pert.config;
    let e = unit(-theta);
    let mut out = c(0.0, 0.0);
    for (sign, w) in [(Sign::Plus, &pert.weights.x), (Sign::Minus, &pert.weights.y)] {
        // A vanishing weight vector contributes nothing, even at the half frequency.
        if w.iter().all(|v| *v == c(0.0, 0.0)) {
            continue;
        }
        let row = &coeffs.c_mk(sign)?[m];
        let s = pairwise_sum(&w.iter().zip(row).map(|(x, r)| x * r).collect::<Vec<_>>());
        out += cfg.oscillation(m, theta, pert.t, sign) * e * cfg.g * s;
    }
    Ok(out)
}

/// 𝒥_m ζ(θ) by direct finite-part quadrature of the shifted ansatz.
#[allow(non_snake_case)]
pub fn apply_J_numeric(pert: &AnsatzPerturbation, m: usize, theta: f64, spec: &QuadratureSpec) -> Result<OperatorValue> {
    pert.check_row(m)?;
    pert.weights.require_compatible(COMPAT_TOL)?;
    let cfg = &pert.config;
    let coeffs = coefficient_set(cfg)?;
    let closed = J_closed_form(pert, &coeffs, m, theta)?;
    let fp = SpiralIntegrals::new(cfg, m, spec)?.j_fp(&pert.weights, theta, pert.t)?;
    let pf = prefactor(cfg);
    Ok(OperatorValue::new(pf * fp.value, closed, pf.norm() * fp.error))
}

/// 𝒥_m ζ(θ) through the reduction of the finite part to two principal-value
/// mode integrals.
#[allow(non_snake_case)]
pub fn apply_J_via_pv(pert: &AnsatzPerturbation, m: usize, theta: f64, spec: &QuadratureSpec) -> Result<OperatorValue> {
    pert.check_row(m)?;
    pert.weights.require_compatible(COMPAT_TOL)?;
    let cfg = &pert.config;
    let coeffs = coefficient_set(cfg)?;
    let closed = J_closed_form(pert, &coeffs, m, theta)?;
    let ints = SpiralIntegrals::new(cfg, m, spec)?;
    let e = unit(-theta);
    let base = cfg.a * cfg.a * cfg.g / (PI * I) / c(cfg.a, 1.0);
    let mut value = c(0.0, 0.0);
    let mut err = 0.0;
    for (sign, w) in [(Sign::Plus, &pert.weights.x), (Sign::Minus, &pert.weights.y)] {
        if w.iter().all(|v| *v == c(0.0, 0.0)) {
            continue;
        }
        let pv = ints.mode_pv(sign, w)?;
        let f = -cfg.oscillation(m, theta, pert.t, sign) * e * base * c(1.0, 2.0 * sign.value() * cfg.alpha);
        value += f * pv.value;
        err += f.norm() * pv.error;
    }
    Ok(OperatorValue::new(value, closed, err))
}

/// ℋ_m = 𝒦_m − 𝒥_m from the two numeric evaluations.
#[allow(non_snake_case)]
pub fn apply_H_numeric(pert: &AnsatzPerturbation, m: usize, theta: f64, spec: &QuadratureSpec) -> Result<OperatorValue> {
    let k = apply_K_numeric(pert, m, theta, spec)?;
    let j = apply_J_numeric(pert, m, theta, spec)?;
    Ok(OperatorValue::new(k.numeric - j.numeric, k.closed - j.closed, k.error_estimate + j.error_estimate))
}

/// Time-dependent amplitudes with optional log-time derivatives t·∂_t.
pub struct AmplitudePath<'a> {
    pub x: Box<dyn Fn(f64) -> Vec<C64> + 'a>,
    pub y: Box<dyn Fn(f64) -> Vec<C64> + 'a>,
    /// (t·∂_t X, t·∂_t Y); central differences when absent.
    pub derivatives: Option<(Box<dyn Fn(f64) -> Vec<C64> + 'a>, Box<dyn Fn(f64) -> Vec<C64> + 'a>)>,
}

impl<'a> AmplitudePath<'a> {
    /// X_m = X(ln t), Y_m = Y(ln t) on every branch, from a log-time solution
    /// with analytic s-derivatives.
    pub fn symmetric(
        m_total: usize,
        x: impl Fn(f64) -> C64 + Clone + 'a,
        y: impl Fn(f64) -> C64 + Clone + 'a,
        dx: impl Fn(f64) -> C64 + 'a,
        dy: impl Fn(f64) -> C64 + 'a,
    ) -> Self {
        Self {
            x: Box::new(move |t| vec![x(t.ln()); m_total]),
            y: Box::new(move |t| vec![y(t.ln()); m_total]),
            derivatives: Some((Box::new(move |t| vec![dx(t.ln()); m_total]), Box::new(move |t| vec![dy(t.ln()); m_total]))),
        }
    }

    fn log_derivatives(&self, t: f64) -> (Vec<C64>, Vec<C64>, bool) {
        match &self.derivatives {
            Some((dx, dy)) => (dx(t), dy(t), false),
            None => {
                let h = DIFF_STEP * t;
                let diff = |f: &dyn Fn(f64) -> Vec<C64>| {
                    let (p, q) = (f(t + h), f(t - h));
                    p.iter().zip(&q).map(|(u, v)| (u - v) * (t / (2.0 * h))).collect::<Vec<_>>()
                };
                (diff(&*self.x), diff(&*self.y), true)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearizedResidual {
    /// max over m of |LHS + ℋ_m ζ|.
    pub residual: f64,
    /// max over m of (|X_m| + |Y_m|)·|c₀|.
    pub scale: f64,
    pub per_branch: Vec<f64>,
    /// Derivatives came from central differences.
    pub numeric_derivative: bool,
}

impl LinearizedResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

/// |t∂_tζ_m* − ((2μ−1)/(2a))∂_θζ_m* + ℋ_m ζ| at (t, θ), maximised over m.
/// The ansatz derivatives are analytic; only the amplitude derivatives may be
/// differenced.
pub fn linearized_residual(
    cfg: &SpiralConfig,
    path: &AmplitudePath<'_>,
    t: f64,
    theta: f64,
    spec: &QuadratureSpec,
) -> Result<LinearizedResidual> {
    let m_total = cfg.branches;
    let (x, y) = ((path.x)(t), (path.y)(t));
    let (dx, dy, numeric_derivative) = path.log_derivatives(t);
    for v in [&x, &y, &dx, &dy] {
        if v.len() != m_total {
            return Err(SpiralError::LengthMismatch { expected: m_total, got: v.len() });
        }
    }
    let weights = PerturbationWeights::new(x.clone(), y.clone())?;
    let zero = weights.x.iter().chain(&weights.y).all(|v| *v == c(0.0, 0.0));
    let pert = AnsatzPerturbation::new(*cfg, weights, t)?;
    let c0v = c0(cfg)?;
    let rot = (2.0 * cfg.mu - 1.0) / (2.0 * cfg.a);
    let e = unit(-theta);
    let mut per_branch = Vec::with_capacity(m_total);
    let mut scale: f64 = 0.0;
    for m in 0..m_total {
        let zp = cfg.oscillation(m, theta, t, Sign::Plus);
        let zm = cfg.oscillation(m, theta, t, Sign::Minus);
        let (tp, th) = (cfg.alpha * (2.0 * cfg.mu - 1.0), 2.0 * cfg.a * cfg.alpha);
        // ζ* = (X* ζ⁻ + Y* ζ⁺) e^{−iθ}
        let dt = ((dx[m].conj() - I * tp * x[m].conj()) * zm + (dy[m].conj() + I * tp * y[m].conj()) * zp) * e;
        let dth = ((-I * th - I) * x[m].conj() * zm + (I * th - I) * y[m].conj() * zp) * e;
        let lhs = dt - rot * dth;
        let h = if zero { c(0.0, 0.0) } else { apply_H_numeric(&pert, m, theta, spec)?.numeric };
        per_branch.push((lhs + h).norm());
        scale = scale.max((x[m].norm() + y[m].norm()) * c0v.norm());
    }
    let residual = per_branch.iter().cloned().fold(0.0, f64::max);
    Ok(LinearizedResidual { residual, scale, per_branch, numeric_derivative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stability::EigenSolution;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn pert(x: C64, y: C64) -> AnsatzPerturbation {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        AnsatzPerturbation::new(cfg, PerturbationWeights::symmetric(3, x, y), 1.0).unwrap()
    }

    #[test]
    fn k_matches_closed_form_and_is_covariant() {
        let p = pert(c(1.0, 0.0), c(0.0, 0.0));
        let mut ratios = vec![];
        for th in [0.0, 1.0, 2.0] {
            let k = apply_K_numeric(&p, 0, th, &spec()).unwrap();
            assert!(k.rel_err < 1e-5, "{k:?}");
            ratios.push(k.numeric * unit(2.0 * th) / p.zeta(0, th));
        }
        assert!((ratios[0] - ratios[1]).norm() < 1e-5 * ratios[0].norm());
        assert!((ratios[0] - ratios[2]).norm() < 1e-5 * ratios[0].norm());
        let q = pert(c(0.0, 0.0), c(1.0, 0.0));
        let (kx, ky) = (apply_K_numeric(&p, 0, 0.4, &spec()).unwrap(), apply_K_numeric(&q, 0, 0.4, &spec()).unwrap());
        let cfg = p.config;
        let want = cfg.oscillation(0, 0.4, 1.0, Sign::Plus) / cfg.oscillation(0, 0.4, 1.0, Sign::Minus);
        assert!((kx.numeric / ky.numeric - want).norm() < 1e-10);
    }

    #[test]
    fn k_is_diagonal() {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        let w = PerturbationWeights::fourier(3, 0);
        let base = AnsatzPerturbation::new(cfg, w.clone(), 1.0).unwrap();
        let mut x = w.x.clone();
        x[1] += c(0.7, -0.2);
        let moved = AnsatzPerturbation::new(cfg, PerturbationWeights::new(x, w.y.clone()).unwrap(), 1.0).unwrap();
        let a = apply_K_numeric(&base, 0, 0.3, &spec()).unwrap().numeric;
        let b = apply_K_numeric(&moved, 0, 0.3, &spec()).unwrap().numeric;
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn j_three_ways() {
        let p = pert(c(1.0, 0.0), c(1.0, 0.0));
        let j = apply_J_numeric(&p, 0, 0.0, &spec()).unwrap();
        assert!(j.rel_err < 1e-5, "{j:?}");
        let v = apply_J_via_pv(&p, 0, 0.0, &spec()).unwrap();
        assert!(v.rel_err < 1e-5, "{v:?}");
        // X only: the minus half is absent
        let px = pert(c(1.0, 0.0), c(0.0, 0.0));
        let jx = apply_J_numeric(&px, 0, 0.0, &spec()).unwrap();
        let cs = coefficient_set(&px.config).unwrap();
        let want = px.config.oscillation(0, 0.0, 1.0, Sign::Plus) * px.config.g * cs.c_mk(Sign::Plus).unwrap()[0].iter().sum::<C64>();
        assert!((jx.numeric - want).norm() < 1e-5 * want.norm());
    }

    #[test]
    fn j_branch_covariance() {
        let p = pert(c(0.4, 0.1), c(-0.3, 0.9));
        let cfg = p.config;
        let th = 0.25;
        let norm = |m: usize, th: f64, v: C64| {
            let d = (cfg.oscillation(m, th, 1.0, Sign::Plus) + cfg.oscillation(m, th, 1.0, Sign::Minus)) * unit(-th);
            v / d
        };
        let j0 = apply_J_numeric(&p, 0, th, &spec()).unwrap().numeric;
        let th1 = th + 2.0 * PI / 3.0;
        let j1 = apply_J_numeric(&p, 1, th1, &spec()).unwrap().numeric;
        let r0 = norm(0, th, j0);
        let r1 = norm(1, th1, j1);
        assert!((r0 - r1).norm() < 1e-5 * r0.norm(), "{r0} {r1}");
    }

    #[test]
    fn operators_are_linear() {
        let cfg = SpiralConfig::new(4, 1.5, 0.2).unwrap();
        let u = PerturbationWeights::fourier(4, 0);
        let v = PerturbationWeights::symmetric(4, c(0.3, -1.1), c(0.5, 0.2));
        let (a, b) = (c(0.7, 0.2), c(-1.3, 0.4));
        let combo = PerturbationWeights::new(
            u.x.iter().zip(&v.x).map(|(p, q)| a * p + b * q).collect(),
            u.y.iter().zip(&v.y).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        let h = |w: &PerturbationWeights| {
            let p = AnsatzPerturbation::new(cfg, w.clone(), 2.0).unwrap();
            (apply_K_numeric(&p, 1, 0.5, &spec()).unwrap().numeric, apply_J_numeric(&p, 1, 0.5, &spec()).unwrap().numeric)
        };
        let (ku, ju) = h(&u);
        let (kv, jv) = h(&v);
        let (kc, jc) = h(&combo);
        assert!((kc - (a * ku + b * kv)).norm() < 1e-10 * kc.norm());
        assert!((jc - (a * ju + b * jv)).norm() < 1e-10 * jc.norm());
    }

    fn eigen_path(cfg: &SpiralConfig, y_scale: f64) -> AmplitudePath<'static> {
        let e = EigenSolution::dominant(cfg).unwrap();
        AmplitudePath::symmetric(
            cfg.branches,
            move |s| e.x(s),
            move |s| y_scale * e.y(s),
            move |s| e.dx(s),
            move |s| y_scale * e.dy(s),
        )
    }

    #[test]
    fn eigen_solution_has_small_residual() {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        let r = linearized_residual(&cfg, &eigen_path(&cfg, 1.0), 1.0, 0.0, &spec()).unwrap();
        assert!(r.relative() < 1e-4, "{r:?}");
        assert!(!r.numeric_derivative);
        let bad = linearized_residual(&cfg, &eigen_path(&cfg, 2.0), 1.0, 0.0, &spec()).unwrap();
        assert!(bad.relative() > 0.1, "{bad:?}");
        let zero = AmplitudePath {
            x: Box::new(|_| vec![c(0.0, 0.0); 3]),
            y: Box::new(|_| vec![c(0.0, 0.0); 3]),
            derivatives: None,
        };
        let z = linearized_residual(&cfg, &zero, 1.0, 0.0, &spec()).unwrap();
        assert_eq!(z.residual, 0.0);
        assert!(z.numeric_derivative);
    }

    #[test]
    fn differenced_derivatives_agree() {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        let e = EigenSolution::dominant(&cfg).unwrap();
        let path = AmplitudePath {
            x: Box::new(move |t| vec![e.x(t.ln()); 3]),
            y: Box::new(move |t| vec![e.y(t.ln()); 3]),
            derivatives: None,
        };
        let r = linearized_residual(&cfg, &path, 1.5, 0.7, &spec()).unwrap();
        assert!(r.numeric_derivative && r.relative() < 1e-4, "{r:?}");
    }
}
