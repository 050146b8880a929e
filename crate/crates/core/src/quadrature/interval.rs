//! Panel Gauss–Legendre integration with pole subtraction (p.v.) and
//! ε-excision plus Richardson extrapolation (f.p.).

use serde::{Deserialize, Serialize};

use super::{Curve, QuadratureSpec};
use crate::error::{Result, SpiralError};
use crate::numerics::{GaussLegendre, C64};

const MAX_DOUBLINGS: usize = 12;
const DIFF_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    #[serde(with = "crate::numerics::complex_json")]
    pub value: C64,
    pub error: f64,
}

/// Finite-part value with its extrapolation diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpEstimate {
    #[serde(with = "crate::numerics::complex_json")]
    pub value: C64,
    pub error: f64,
    /// |T_k − T_{k−1}| at the final Richardson level, one per usable ε.
    pub residuals: Vec<f64>,
    pub selected_eps: f64,
    /// Independent by-parts value (numeric derivative), when computed.
    pub by_parts: Option<Estimate>,
    /// Set when the two evaluations disagree beyond 10·tol.
    pub mismatch_warning: bool,
    /// Set when a derivative was obtained by central differences.
    pub numeric_derivative: bool,
}

fn equal_panels(f: &impl Fn(f64) -> C64, lo: f64, hi: f64, n: usize, rule: &GaussLegendre) -> C64 {
    let w = (hi - lo) / n as f64;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let p_lo = lo + w * i as f64;
        let p_hi = if i + 1 == n { hi } else { p_lo + w };
        acc += rule.integrate(p_lo, p_hi, f);
    }
    acc
}

/// Composite Gauss–Legendre on [lo, hi], doubling the panel count until two
/// successive values agree to tol·max(1, |value|).
pub fn integrate_regular(f: impl Fn(f64) -> C64, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    if hi == lo {
        return Ok(Estimate { value: C64::new(0.0, 0.0), error: 0.0 });
    }
    let rule = GaussLegendre::shared(spec.panel_points);
    let mut n = ((hi - lo).abs() / spec.max_panel_width).ceil().max(1.0) as usize;
    let mut coarse = equal_panels(&f, lo, hi, n, &rule);
    let mut best = f64::INFINITY;
    for _ in 0..MAX_DOUBLINGS {
        n *= 2;
        let fine = equal_panels(&f, lo, hi, n, &rule);
        let err = (fine - coarse).norm();
        best = best.min(err);
        if err <= spec.tol * fine.norm().max(1.0) {
            return Ok(Estimate { value: fine, error: err });
        }
        coarse = fine;
    }
    Err(SpiralError::NoConvergence { estimate: best, tol: spec.tol })
}

fn check_interior(x: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo < x && x < hi) {
        return Err(SpiralError::NonInteriorPole { x, lo, hi });
    }
    Ok(())
}

/// p.v.∫_lo^hi f(t)/(t−x) dt by subtracting f(x) and adding f(x) ln((hi−x)/(x−lo)).
pub fn pv_integral(f: impl Fn(f64) -> C64, x: f64, interval: (f64, f64), spec: &QuadratureSpec) -> Result<Estimate> {
    let (lo, hi) = interval;
    check_interior(x, lo, hi)?;
    let fx = f(x);
    let q = |t: f64| (f(t) - fx) / (t - x);
    let left = integrate_regular(q, lo, x, spec)?;
    let right = integrate_regular(q, x, hi, spec)?;
    Ok(Estimate {
        value: left.value + right.value + fx * ((hi - x) / (x - lo)).ln(),
        error: left.error + right.error,
    })
}

/// p.v.∫ f(t)/(γ(t)−γ(x)) dt.
pub fn pv_curve_integral(
    f: impl Fn(f64) -> C64,
    curve: &Curve<'_>,
    x: f64,
    interval: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<Estimate> {
    let at_x = f(x) / (curve.dgamma)(x);
    let q = |t: f64| if t == x { at_x } else { f(t) * (t - x) / curve.chord(t, x) };
    pv_integral(q, x, interval, spec)
}

/// Integral over offsets d ∈ [d_lo, d_hi] from x (direction ±1) on panels
/// that double in width away from x and are capped at the spec width.
fn geometric_integral(g: &impl Fn(f64) -> C64, x: f64, dir: f64, d_lo: f64, d_hi: f64, spec: &QuadratureSpec, split: usize) -> C64 {
    let rule = GaussLegendre::shared(spec.panel_points);
    let mut acc = C64::new(0.0, 0.0);
    let mut start = d_lo;
    while start < d_hi {
        let end = (2.0 * start).min(d_hi);
        let pieces = (((end - start) / spec.max_panel_width).ceil().max(1.0) as usize) * split;
        let w = (end - start) / pieces as f64;
        for i in 0..pieces {
            let p0 = start + w * i as f64;
            let p1 = if i + 1 == pieces { end } else { p0 + w };
            acc += rule.integrate(p0, p1, |d| g(x + dir * d)) ;
        }
        start = end;
    }
    acc
}

fn usable_schedule(spec: &QuadratureSpec, x: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    spec.validate()?;
    let limit = 0.5 * (x - lo).min(hi - x);
    let eps: Vec<f64> = spec.eps_schedule.iter().copied().filter(|e| *e < limit).collect();
    if eps.len() < spec.extrapolation_order + 2 {
        return Err(SpiralError::InvalidParameter(format!(
            "only {} excision radii fit inside the interval; {} needed",
            eps.len(),
            spec.extrapolation_order + 2
        )));
    }
    Ok(eps)
}

/// ε-excision with boundary compensators, extrapolated in odd powers of ε.
fn fp_extrapolated(f: &impl Fn(f64) -> C64, curve: &Curve<'_>, x: f64, lo: f64, hi: f64, spec: &QuadratureSpec) -> Result<FpEstimate> {
    check_interior(x, lo, hi)?;
    let eps = usable_schedule(spec, x, lo, hi)?;
    let g = |t: f64| {
        let d = curve.chord(t, x);
        f(t) / (d * d)
    };
    let comp = |e: f64| {
        let dp = curve.chord(x + e, x);
        let dm = curve.chord(x - e, x);
        e * f(x + e) / (dp * dp) + e * f(x - e) / (dm * dm)
    };

    let e0 = eps[0];
    let outer = |split: usize| {
        geometric_integral(&g, x, 1.0, e0, hi - x, spec, split) + geometric_integral(&g, x, -1.0, e0, x - lo, spec, split)
    };
    let outer_coarse = outer(1);
    let outer_fine = outer(2);
    let outer_err = (outer_fine - outer_coarse).norm();

    let mut values = Vec::with_capacity(eps.len());
    let mut inner = C64::new(0.0, 0.0);
    values.push(outer_fine - comp(e0));
    for k in 1..eps.len() {
        inner += geometric_integral(&g, x, 1.0, eps[k], eps[k - 1], spec, 1)
            + geometric_integral(&g, x, -1.0, eps[k], eps[k - 1], spec, 1);
        values.push(outer_fine + inner - comp(eps[k]));
    }

    let order = spec.extrapolation_order;
    let mut table = vec![values];
    for j in 1..=order {
        let prev = &table[j - 1];
        let p = (2 * j - 1) as i32;
        let mut next = vec![C64::new(f64::NAN, f64::NAN); prev.len()];
        for k in j..prev.len() {
            let r = eps[k - 1] / eps[k];
            next[k] = prev[k] + (prev[k] - prev[k - 1]) / (r.powi(p) - 1.0);
        }
        table.push(next);
    }
    let last = &table[order];
    let residuals: Vec<f64> = (order + 1..last.len()).map(|k| (last[k] - last[k - 1]).norm()).collect();
    let (best_idx, best_res) = residuals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if *r < acc.1 { (i, *r) } else { acc });
    let k = best_idx + order + 1;
    let value = last[k];
    let error = best_res + outer_err;
    if !(error <= spec.tol * value.norm().max(1.0)) {
        return Err(SpiralError::NoConvergence { estimate: error, tol: spec.tol });
    }
    Ok(FpEstimate {
        value,
        error,
        residuals,
        selected_eps: eps[k],
        by_parts: None,
        mismatch_warning: false,
        numeric_derivative: false,
    })
}

/// Hadamard finite part f.p.∫_lo^hi f(t)/(γ(t)−γ(x))² dt, cross-checked
/// against the by-parts form with a differenced derivative.
pub fn fp_integral(
    f: impl Fn(f64) -> C64,
    curve: &Curve<'_>,
    x: f64,
    interval: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<FpEstimate> {
    let (lo, hi) = interval;
    curve.check_regular(lo, hi, 16)?;
    let mut est = fp_extrapolated(&f, curve, x, lo, hi, spec)?;
    if let Ok(bp) = fp_via_parts(&f, None::<fn(f64) -> C64>, curve, x, interval, spec) {
        est.mismatch_warning = (bp.value - est.value).norm() > 10.0 * spec.tol * est.value.norm().max(1.0);
        est.by_parts = Some(bp);
        est.numeric_derivative = true;
    } else {
        est.mismatch_warning = true;
    }
    Ok(est)
}

/// f.p. integral through integration by parts:
/// p.v.∫ (f/γ′)′/(γ−γ(x)) − f(b)/(γ′(b)(γ(b)−γ(x))) + f(a)/(γ′(a)(γ(a)−γ(x))).
/// Without `dh` the derivative of f/γ′ is central-differenced.
pub fn fp_via_parts<F, D>(
    f: F,
    dh: Option<D>,
    curve: &Curve<'_>,
    x: f64,
    interval: (f64, f64),
    spec: &QuadratureSpec,
) -> Result<Estimate>
where
    F: Fn(f64) -> C64,
    D: Fn(f64) -> C64,
{
    let (lo, hi) = interval;
    check_interior(x, lo, hi)?;
    let h = |t: f64| f(t) / (curve.dgamma)(t);
    let deriv = |t: f64| match &dh {
        Some(d) => d(t),
        None => (h(t + DIFF_STEP) - h(t - DIFF_STEP)) / (2.0 * DIFF_STEP),
    };
    let pv = pv_curve_integral(deriv, curve, x, interval, spec)?;
    let value = pv.value - h(hi) / curve.chord(hi, x) + h(lo) / curve.chord(lo, x);
    let diff_err = if dh.is_none() { 1e-10 * value.norm().max(1.0) } else { 0.0 };
    Ok(Estimate { value, error: pv.error + diff_err })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn pv_examples() {
        let v = pv_integral(|_| c(1.0, 0.0), 0.0, (-1.0, 2.0), &spec()).unwrap();
        assert!((v.value - c(2f64.ln(), 0.0)).norm() < 1e-10);
        let v = pv_integral(|_| c(1.0, 0.0), 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!(v.value.norm() < 1e-12);
        assert!(matches!(
            pv_integral(|_| c(1.0, 0.0), 1.0, (-1.0, 1.0), &spec()),
            Err(SpiralError::NonInteriorPole { .. })
        ));
    }

    #[test]
    fn pv_exponential_matches_brute_force_excision() {
        // trapezoid on the excised form ∫_ε^1 (e^t − e^{−t})/t dt; the excision bias is ≈ 2ε
        let eps = 1e-7;
        let n = 200_000;
        let h = (1.0 - eps) / n as f64;
        let f = |t: f64| (t.exp() - (-t).exp()) / t;
        let mut s = 0.5 * (f(eps) + f(1.0));
        for i in 1..n {
            s += f(eps + h * i as f64);
        }
        let brute = s * h;
        let v = pv_integral(|t| c(t.exp(), 0.0), 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!((v.value.re - brute).abs() < 1e-6, "{} vs {brute}", v.value.re);
        assert!((v.value.re - 2.114_501_750_751_457).abs() < 1e-12);
    }

    #[test]
    fn fp_examples() {
        let line = Curve::line();
        let v = fp_integral(|_| c(1.0, 0.0), &line, 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!((v.value + 2.0).norm() < 1e-9);
        assert!(!v.mismatch_warning);
        let v = fp_integral(|t| c(t * t, 0.0), &line, 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!((v.value - 2.0).norm() < 1e-9);
        let v = fp_integral(|t| c(t, 0.0), &line, 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!(v.value.norm() < 1e-9);
    }

    #[test]
    fn fp_by_parts_agree() {
        let line = Curve::line();
        let bp = fp_via_parts(|_| c(1.0, 0.0), Some(|_| c(0.0, 0.0)), &line, 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!((bp.value + 2.0).norm() < 1e-9);
        let a = 2.0;
        let k = c(a, 1.0);
        let curve = Curve::exponential(k, 0.0);
        let f = |t: f64| c((2.0 * a * t).exp(), 0.0);
        // h = f/γ′ = e^{(2a − k)t}/k
        let dh = |t: f64| (2.0 * a - k) * ((2.0 * a - k) * t).exp() / k;
        let fp = fp_integral(f, &curve, 0.0, (-1.0, 1.0), &spec()).unwrap();
        let bp = fp_via_parts(f, Some(dh), &curve, 0.0, (-1.0, 1.0), &spec()).unwrap();
        assert!((fp.value - bp.value).norm() < 1e-7 * fp.value.norm().max(1.0));
        assert!(!fp.mismatch_warning);
    }

    #[test]
    fn residuals_shrink_in_asymptotic_regime() {
        let curve = Curve::exponential(c(1.0, 1.0), 0.3);
        let s = QuadratureSpec { extrapolation_order: 0, tol: 1e-3, ..spec() };
        let fp = fp_integral(|t| c(t.cos(), t.sin() * 0.5), &curve, 0.1, (-1.0, 1.0), &s).unwrap();
        // raw residuals ~ c1·ε until roundoff (~1e-16/ε) takes over
        let rs = &fp.residuals;
        for w in rs.windows(2) {
            if w[1] > 1e-9 {
                assert!(w[1] < w[0], "{rs:?}");
            }
        }
    }

    #[test]
    fn schedule_validation() {
        let bad = QuadratureSpec { eps_schedule: vec![0.1, 0.2], ..spec() };
        assert!(bad.validate().is_err());
        let line = Curve::line();
        assert!(fp_integral(|_| c(1.0, 0.0), &line, 0.999_999_9, (-1.0, 1.0), &spec()).is_err());
    }
}
