//! Spectrum of the reduced 2×2 system, the growth exponent δ, the
//! collinearity margin, large-a asymptotics and parameter sweeps.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coefficients::{c0, c_pm};
use crate::error::{Result, SpiralError};
use crate::numerics::{c, coth, C64, I};
use crate::spiral::{a_constant, Sign, SpiralConfig, DEFAULT_HALF_GUARD};

/// δ above this counts as growth in sweeps and in [`StabilityResult::unstable`].
pub const GROWTH_THRESHOLD: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    #[serde(rename = "P", with = "crate::numerics::complex_json")]
    pub p: C64,
    pub q: f64,
    #[serde(with = "crate::numerics::complex_json")]
    pub lambda1: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub lambda2: C64,
    pub delta: f64,
    #[serde(rename = "im_P")]
    pub im_p: f64,
    pub collinearity_margin: f64,
    /// c⁺ = c⁻, so the line through them is undefined and the margin is 0.
    pub degenerate_line: bool,
    pub unstable: bool,
}

/// Roots of λ² − iqλ − P = 0, larger-magnitude root first.
pub fn reduced_eigenvalues(p: C64, q: f64) -> (C64, C64) {
    let iq = c(0.0, q);
    let d = (4.0 * p - q * q).sqrt();
    let plus = iq + d;
    let minus = iq - d;
    let l1 = if plus.norm() >= minus.norm() { plus } else { minus } * 0.5;
    if l1.norm() == 0.0 {
        return (l1, l1);
    }
    (l1, -p / l1)
}

/// Builds the result from the three coefficients and q = (1−2μ)/a.
pub fn stability_from_coefficients(c0: C64, c_plus: C64, c_minus: C64, q: f64) -> StabilityResult {
    let p = (c0 - c_minus).conj() * (c0 - c_plus);
    let (lambda1, lambda2) = reduced_eigenvalues(p, q);
    let delta = lambda1.re.max(lambda2.re).max(0.0);
    let base = (c_plus - c_minus).norm();
    let degenerate_line = base == 0.0;
    let collinearity_margin = if degenerate_line { 0.0 } else { p.im.abs() / base };
    StabilityResult {
        p,
        q,
        lambda1,
        lambda2,
        delta,
        im_p: p.im,
        collinearity_margin,
        degenerate_line,
        unstable: delta > GROWTH_THRESHOLD,
    }
}

/// Stability data for a synthetic (P, q) with no coefficient geometry.
pub fn stability_from_pq(p: C64, q: f64) -> StabilityResult {
    // c₀ = 0, c⁻ = −1, c⁺ = −P reproduces P exactly.
    stability_from_coefficients(c(0.0, 0.0), -p, c(-1.0, 0.0), q)
}

pub fn stability_analysis(cfg: &SpiralConfig) -> Result<StabilityResult> {
    let q = (1.0 - 2.0 * cfg.mu) / cfg.a;
    Ok(stability_from_coefficients(c0(cfg)?, c_pm(cfg, Sign::Plus)?, c_pm(cfg, Sign::Minus)?, q))
}

/// β = (1−2μ)/(2a), the phase rate in log-time.
pub fn beta(cfg: &SpiralConfig) -> f64 {
    (1.0 - 2.0 * cfg.mu) / (2.0 * cfg.a)
}

/// Exact solution X(s) = x e^{(λ−iβ)s}, Y(s) = −λ* x* e^{(λ*+iβ)s}/(c₀−c⁻)
/// of the reduced system, together with dX/ds and dY/ds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenSolution {
    pub lambda: C64,
    pub beta: f64,
    pub c0_minus_cm: C64,
    pub amplitude: C64,
}

impl EigenSolution {
    pub fn dominant(cfg: &SpiralConfig) -> Result<Self> {
        let st = stability_analysis(cfg)?;
        let lambda = if st.lambda1.re >= st.lambda2.re { st.lambda1 } else { st.lambda2 };
        Ok(Self { lambda, beta: beta(cfg), c0_minus_cm: c0(cfg)? - c_pm(cfg, Sign::Minus)?, amplitude: c(1.0, 0.0) })
    }

    pub fn x(&self, s: f64) -> C64 {
        self.amplitude * ((self.lambda - I * self.beta) * s).exp()
    }

    pub fn y(&self, s: f64) -> C64 {
        -self.lambda.conj() * self.amplitude.conj() * ((self.lambda.conj() + I * self.beta) * s).exp() / self.c0_minus_cm
    }

    pub fn dx(&self, s: f64) -> C64 {
        (self.lambda - I * self.beta) * self.x(s)
    }

    pub fn dy(&self, s: f64) -> C64 {
        (self.lambda.conj() + I * self.beta) * self.y(s)
    }
}

/// Exact values at α → 1/(2a) and their first-order large-a expansions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticB {
    #[serde(with = "crate::numerics::complex_json")]
    pub b0: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub b_plus: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub b_minus: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub b0_expansion: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub b_plus_expansion: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub b_minus_expansion: C64,
}

pub fn asymptotic_b(m: usize, a: f64) -> Result<AsymptoticB> {
    if m < 3 || !(a > 0.0) {
        return Err(SpiralError::InvalidParameter(format!("M = {m}, a = {a}")));
    }
    let mf = m as f64;
    let b0 = c(1.0, -1.0 / a) * coth(PI * a_constant(a) / mf)?;
    let b_plus = c(1.0, 1.0 / a) * coth(c(0.0, -PI / mf))?;
    let bm_arg = c(-2.0 * a / (a * a + 1.0), -(a * a - 1.0) / (a * a + 1.0)) * PI / mf;
    let b_minus = c(1.0, -1.0 / a) * coth(bm_arg)?;
    let expansion = |phi: f64| {
        let cot = 1.0 / phi.tan();
        c(0.0, cot) - (2.0 * PI / (mf * phi.sin().powi(2)) - cot) / a
    };
    let cot1 = 1.0 / (PI / mf).tan();
    Ok(AsymptoticB {
        b0,
        b_plus,
        b_minus,
        b0_expansion: expansion(2.0 * PI / mf),
        b_plus_expansion: c(-cot1 / a, cot1),
        b_minus_expansion: expansion(PI / mf),
    })
}

/// One grid point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    #[serde(rename = "M")]
    pub m: usize,
    pub a: f64,
    pub alpha: f64,
    pub mu: Option<f64>,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    #[serde(rename = "im_P")]
    pub im_p: Option<f64>,
    pub margin: Option<f64>,
    pub at_half: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub result: Option<StabilityResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    #[serde(rename = "M")]
    pub m: usize,
    pub a_range: (f64, f64),
    pub alpha_range: (f64, f64),
    pub n_a: usize,
    pub n_alpha: usize,
    /// Fraction of error-free cells with δ above the growth threshold.
    pub unstable_fraction: f64,
    /// a-major: cell (i, j) sits at index i·n_alpha + j.
    pub cells: Vec<SweepCell>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect()
}

fn check_ranges(m: usize, r1: (f64, f64), r2: (f64, f64), n1: usize, n2: usize) -> Result<()> {
    if m < 3 {
        return Err(SpiralError::InvalidParameter(format!("M = {m}; at least 3 required")));
    }
    if n1 < 2 || n2 < 2 {
        return Err(SpiralError::InvalidParameter("sweep resolutions must be at least 2".into()));
    }
    if !(r1.0 > 0.0 && r1.1 >= r1.0) {
        return Err(SpiralError::InvalidParameter(format!("bad a range {r1:?}")));
    }
    if !(r2.1 >= r2.0) || !r2.0.is_finite() {
        return Err(SpiralError::InvalidParameter(format!("bad alpha range {r2:?}")));
    }
    Ok(())
}

fn cell(m: usize, a: f64, alpha: f64, half_tol: f64) -> SweepCell {
    let half = 0.5 / a;
    let at_half = (alpha - half).abs() <= half_tol.max(DEFAULT_HALF_GUARD * half);
    let mut out = SweepCell {
        m,
        a,
        alpha,
        mu: None,
        g: None,
        delta: None,
        im_p: None,
        margin: None,
        at_half,
        error: None,
        result: None,
    };
    match SpiralConfig::new(m, a, alpha).and_then(|cfg| Ok((cfg, stability_analysis(&cfg)?))) {
        Ok((cfg, st)) => {
            out.mu = Some(cfg.mu);
            out.g = Some(cfg.g);
            out.delta = Some(st.delta);
            out.im_p = Some(st.im_p);
            out.margin = Some(st.collinearity_margin);
            out.result = Some(st);
        }
        Err(e) => out.error = Some(e.to_string()),
    }
    out
}

fn finish(m: usize, a_range: (f64, f64), alpha_range: (f64, f64), n_a: usize, n_alpha: usize, cells: Vec<SweepCell>) -> SweepResult {
    let ok: Vec<&SweepCell> = cells.iter().filter(|c| c.error.is_none()).collect();
    let unstable = ok.iter().filter(|c| c.delta.unwrap_or(0.0) > GROWTH_THRESHOLD).count();
    let unstable_fraction = if ok.is_empty() { 0.0 } else { unstable as f64 / ok.len() as f64 };
    SweepResult { m, a_range, alpha_range, n_a, n_alpha, unstable_fraction, cells }
}

/// Rectangular (a, α) sweep; cells are evaluated in parallel and returned in
/// a-major order. A cell is flagged `at_half` when the curve α = 1/(2a)
/// passes within half an α-spacing of it.
pub fn sweep(m: usize, a_range: (f64, f64), alpha_range: (f64, f64), n_a: usize, n_alpha: usize) -> Result<SweepResult> {
    check_ranges(m, a_range, alpha_range, n_a, n_alpha)?;
    if !(alpha_range.0 > 0.0) {
        return Err(SpiralError::InvalidParameter(format!("bad alpha range {alpha_range:?}")));
    }
    let a_grid = linspace(a_range.0, a_range.1, n_a);
    let al_grid = linspace(alpha_range.0, alpha_range.1, n_alpha);
    let spacing = 0.5 * (alpha_range.1 - alpha_range.0) / (n_alpha - 1) as f64;
    let points: Vec<(f64, f64)> = a_grid.iter().flat_map(|&a| al_grid.iter().map(move |&al| (a, al))).collect();
    let cells = points.par_iter().map(|&(a, al)| cell(m, a, al, spacing)).collect();
    Ok(finish(m, a_range, alpha_range, n_a, n_alpha, cells))
}

/// Sweep with α = (1+r)/(2a) for r on `r_range`, which resolves the band
/// around the half-frequency curve uniformly in a.
pub fn sweep_relative(m: usize, a_range: (f64, f64), r_range: (f64, f64), n_a: usize, n_r: usize) -> Result<SweepResult> {
    check_ranges(m, a_range, r_range, n_a, n_r)?;
    if !(r_range.0 > -1.0) {
        return Err(SpiralError::InvalidParameter(format!("relative offsets must exceed -1, got {r_range:?}")));
    }
    let a_grid = linspace(a_range.0, a_range.1, n_a);
    let r_grid = linspace(r_range.0, r_range.1, n_r);
    let r_spacing = 0.5 * (r_range.1 - r_range.0) / (n_r - 1) as f64;
    let points: Vec<(f64, f64)> = a_grid.iter().flat_map(|&a| r_grid.iter().map(move |&r| (a, r))).collect();
    let cells = points
        .par_iter()
        .map(|&(a, r)| cell(m, a, (1.0 + r) * 0.5 / a, r_spacing * 0.5 / a))
        .collect();
    let alpha_range = ((1.0 + r_range.0) * 0.5 / a_range.1, (1.0 + r_range.1) * 0.5 / a_range.0);
    Ok(finish(m, a_range, alpha_range, n_a, n_r, cells))
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("M,a,alpha,mu,g,delta,im_P,margin,at_half,error\n");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for c in &self.cells {
            let err = c.error.as_deref().unwrap_or("").replace(['"', ',', '\n'], " ");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                c.m,
                c.a,
                c.alpha,
                opt(c.mu),
                opt(c.g),
                opt(c.delta),
                opt(c.im_p),
                opt(c.margin),
                c.at_half,
                err
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("sweep results serialise")
    }

    /// Cells where Im P ≠ 0 but δ does not exceed the growth threshold.
    pub fn sufficiency_counterexamples(&self) -> Vec<&SweepCell> {
        self.cells
            .iter()
            .filter(|c| matches!((c.im_p, c.delta), (Some(ip), Some(d)) if ip != 0.0 && !(d > 0.0)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn synthetic_spectra() {
        let r = stability_from_pq(c(1.0, 0.0), 0.0);
        assert!((r.delta - 1.0).abs() < 1e-15);
        let mut ls = [r.lambda1.re, r.lambda2.re];
        ls.sort_by(f64::total_cmp);
        assert!((ls[0] + 1.0).abs() < 1e-15 && (ls[1] - 1.0).abs() < 1e-15);
        let r = stability_from_pq(c(-1.0, 0.0), 0.0);
        assert_eq!(r.delta, 0.0);
        assert!((r.lambda1.im.abs() - 1.0).abs() < 1e-15 && r.lambda1.re.abs() < 1e-15);
        assert!(!r.unstable);
    }

    #[test]
    fn pinned_delta_values() {
        let r = stability_analysis(&SpiralConfig::new(3, 2.0, 0.3).unwrap()).unwrap();
        assert!((r.delta - 0.323_737_72).abs() < 1e-7, "{}", r.delta);
        assert!((r.p - c(0.055_165_761, -0.194_518_8)).norm() < 1e-7);
        assert!((r.q - 0.403_066_98).abs() < 1e-7);
        for (m, a, al, d) in [(3, 1.0, 0.2, 0.0729), (4, 2.0, 0.1, 0.341), (5, 3.0, 0.5, 1.594), (3, 0.5, 1.0, 0.482), (6, 5.0, 0.05, 2.95)] {
            let r = stability_analysis(&SpiralConfig::new(m, a, al).unwrap()).unwrap();
            assert!((r.delta - d).abs() < 1e-3 * d.max(1.0) * 5.0, "{m} {a} {al}: {}", r.delta);
        }
    }

    #[test]
    fn large_a_near_half_is_unstable() {
        for m in 3..=8 {
            for f in [0.99, 1.01] {
                let r = stability_analysis(&SpiralConfig::new(m, 50.0, f / 100.0).unwrap()).unwrap();
                assert!(r.delta > 0.0, "M = {m}, factor {f}");
            }
        }
    }

    #[test]
    fn eigen_solution_solves_reduced_system() {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        let e = EigenSolution::dominant(&cfg).unwrap();
        let cm = c_pm(&cfg, Sign::Minus).unwrap();
        let cp = c_pm(&cfg, Sign::Plus).unwrap();
        let z0 = c0(&cfg).unwrap();
        for s in [0.0, 0.7, 2.0] {
            let r1 = e.dx(s) + I * e.beta * e.x(s) + (z0 - cm).conj() * e.y(s).conj();
            let r2 = e.dy(s) + I * e.beta * e.y(s) + (z0 - cp).conj() * e.x(s).conj();
            assert!(r1.norm() < 1e-12 * e.x(s).norm() && r2.norm() < 1e-12 * e.x(s).norm());
        }
    }

    #[test]
    fn asymptotic_examples() {
        for a in [10.0, 100.0] {
            let b = asymptotic_b(5, a).unwrap();
            assert!((b.b_plus - b.b_plus_expansion).norm() < 1e-12);
        }
        let cfg = SpiralConfig::new(4, 7.0, 0.2).unwrap();
        let b = asymptotic_b(4, 7.0).unwrap();
        let back = b.b0 * 49.0 * cfg.g / (c(7.0, 1.0) * c(7.0, 1.0));
        assert!((back - c0(&cfg).unwrap()).norm() < 1e-12 * back.norm());
        for (m, f) in [(3usize, 0.0), (5, 0.0)] {
            let lo = asymptotic_b(m, 100.0).unwrap();
            let hi = asymptotic_b(m, 1000.0).unwrap();
            let r0 = 100.0 * (lo.b0 - lo.b0_expansion).norm() / (1000.0 * (hi.b0 - hi.b0_expansion).norm());
            let rm = 100.0 * (lo.b_minus - lo.b_minus_expansion).norm() / (1000.0 * (hi.b_minus - hi.b_minus_expansion).norm());
            assert!(r0 >= 5.0 && rm >= 5.0, "{r0} {rm}");
            let _ = f;
        }
        let big = asymptotic_b(3, 1e8).unwrap();
        assert!(big.b_plus_expansion.re.abs() < 1e-7 && big.b0_expansion.re.abs() < 1e-7 && big.b_minus_expansion.re.abs() < 1e-7);
        assert!((big.b_plus.im - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sweep_shape_and_determinism() {
        let s = sweep(3, (1.0, 2.0), (0.1, 0.5), 2, 2).unwrap();
        assert_eq!(s.cells.len(), 4);
        assert_eq!(s.to_csv().lines().count(), 5);
        assert!(s.to_csv().starts_with("M,a,alpha,mu,g,delta,im_P,margin,at_half,error\n"));
        let a = sweep(4, (0.5, 8.0), (0.05, 1.5), 9, 11).unwrap();
        let b = sweep(4, (0.5, 8.0), (0.05, 1.5), 9, 11).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.to_json(), b.to_json());
        assert!(sweep(3, (1.0, 2.0), (0.1, 0.5), 1, 2).is_err());
    }

    #[test]
    fn degenerate_line_margin() {
        let r = stability_from_coefficients(c(0.3, 0.1), c(1.0, 1.0), c(1.0, 1.0), 0.2);
        assert!(r.degenerate_line && r.collinearity_margin == 0.0);
        // c₀ on the line through c⁺, c⁻
        let r = stability_from_coefficients(c(0.5, 0.5), c(1.0, 1.0), c(0.0, 0.0), 0.2);
        assert!(r.collinearity_margin < 1e-12 && r.im_p.abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn eigenvalue_identities(m in 3usize..9, a in 0.2f64..60.0, alpha in 0.005f64..3.0) {
            let cfg = SpiralConfig::new(m, a, alpha).unwrap();
            let r = stability_analysis(&cfg).unwrap();
            let scale = r.lambda1.norm().max(r.lambda2.norm()).max(r.q.abs()).max(1e-300);
            prop_assert!((r.lambda1 + r.lambda2 - c(0.0, r.q)).norm() <= 1e-12 * scale);
            prop_assert!((r.lambda1 * r.lambda2 + r.p).norm() <= 1e-12 * r.p.norm().max(scale * scale));
            prop_assert!((r.lambda1.re + r.lambda2.re).abs() <= 1e-12 * scale);
            prop_assert!(r.delta >= 0.0);
            if r.im_p != 0.0 { prop_assert!(r.delta > 0.0); }
        }

        #[test]
        fn margin_is_distance_to_line(x0 in -2.0f64..2.0, y0 in -2.0f64..2.0, x1 in -2.0f64..2.0, y1 in -2.0f64..2.0,
                                      x2 in -2.0f64..2.0, y2 in -2.0f64..2.0) {
            let (z0, zp, zm) = (c(x0, y0), c(x1, y1), c(x2, y2));
            prop_assume!((zp - zm).norm() > 1e-3);
            let r = stability_from_coefficients(z0, zp, zm, 0.0);
            let u = (zp - zm) / (zp - zm).norm();
            let w = z0 - zm;
            let dist = (w.re * u.im - w.im * u.re).abs();
            prop_assert!((r.collinearity_margin - dist).abs() < 1e-12);
        }
    }
}
