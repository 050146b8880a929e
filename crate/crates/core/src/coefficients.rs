//! Derived constants A, B±, the coefficients c₀, c^±, c_mk^±, and the residue
//! sums that produce them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SpiralError};
use crate::numerics::{c, coth, csch, pairwise_sum, C64};
use crate::spiral::{a_constant, Sign, SpiralConfig, DEFAULT_HALF_GUARD};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    #[serde(rename = "A", with = "crate::numerics::complex_json")]
    pub a_const: C64,
    #[serde(rename = "B_plus", with = "crate::numerics::complex_json")]
    pub b_plus: C64,
    #[serde(rename = "B_minus", with = "crate::numerics::complex_json")]
    pub b_minus: C64,
}

/// B± = −a(±2iα+1)(1+ai)/(1+a²).
pub fn b_constant(a: f64, alpha: f64, sign: Sign) -> C64 {
    let s = sign.value();
    -a * c(1.0, 2.0 * s * alpha) * c(1.0, a) / (1.0 + a * a)
}

pub fn derived_constants(a: f64, alpha: f64) -> DerivedConstants {
    DerivedConstants {
        a_const: a_constant(a),
        b_plus: b_constant(a, alpha, Sign::Plus),
        b_minus: b_constant(a, alpha, Sign::Minus),
    }
}

impl DerivedConstants {
    pub fn b(&self, sign: Sign) -> C64 {
        match sign {
            Sign::Plus => self.b_plus,
            Sign::Minus => self.b_minus,
        }
    }
}

/// Three-case kernel ℬ_mk for branch offset d = k − m ∈ (−M, M):
/// e^{Δ B} times e^{−πB}, cosh(πB) or e^{πB} as Δ is positive, zero or negative.
pub fn three_case(b: C64, m_total: usize, d: i64) -> C64 {
    let delta = 2.0 * PI * d as f64 / m_total as f64;
    match d.signum() {
        1 => ((delta - PI) * b).exp(),
        0 => (PI * b).cosh(),
        _ => ((delta + PI) * b).exp(),
    }
}

/// Dense M×M matrix of the three-case kernel.
pub fn three_case_matrix(b: C64, m_total: usize) -> Vec<Vec<C64>> {
    (0..m_total)
        .map(|m| (0..m_total).map(|k| three_case(b, m_total, k as i64 - m as i64)).collect())
        .collect()
}

fn check_sinh_ratio(b: C64, m_total: usize) -> Result<()> {
    let s = (PI * b / m_total as f64).sinh();
    if s.norm() < 1e-14 {
        return Err(SpiralError::PoleProximity { z: format!("{}", PI * b / m_total as f64), guard: 1e-14 });
    }
    Ok(())
}

/// sinh(πB)·coth(πB/M).
pub fn coth_sum_closed_form(b: C64, m_total: usize) -> Result<C64> {
    check_sinh_ratio(b, m_total)?;
    Ok((PI * b).sinh() * coth(PI * b / m_total as f64)?)
}

/// Σ_k ℬ_mk for row m, summed directly.
pub fn coth_sum_direct(b: C64, m_total: usize, m: usize) -> Result<C64> {
    check_sinh_ratio(b, m_total)?;
    let terms: Vec<C64> = (0..m_total).map(|k| three_case(b, m_total, k as i64 - m as i64)).collect();
    Ok(pairwise_sum(&terms))
}

/// Prefactor a²(±2iα+1)/(a+i)² multiplying ℬ/sinh(πB) in c_mk^±.
fn mode_prefactor(a: f64, alpha: f64, sign: Sign) -> C64 {
    let ap = c(a, 1.0);
    a * a * c(1.0, 2.0 * sign.value() * alpha) / (ap * ap)
}

/// c₀ = ga(a−i)/(a+i)² coth(πA/M).
pub fn c0(cfg: &SpiralConfig) -> Result<C64> {
    let ap = c(cfg.a, 1.0);
    Ok(cfg.g * cfg.a * c(cfg.a, -1.0) / (ap * ap) * coth(PI * a_constant(cfg.a) / cfg.branches as f64)?)
}

/// c^± = ga²(±2iα+1)/(a+i)² coth(πB±/M).
pub fn c_pm(cfg: &SpiralConfig, sign: Sign) -> Result<C64> {
    let b = b_constant(cfg.a, cfg.alpha, sign);
    Ok(cfg.g * mode_prefactor(cfg.a, cfg.alpha, sign) * coth(PI * b / cfg.branches as f64)?)
}

/// Entrywise c_mk^±; refused for the plus sign inside the half-frequency guard.
pub fn c_mk(cfg: &SpiralConfig, sign: Sign, half_guard: f64) -> Result<Vec<Vec<C64>>> {
    if sign == Sign::Plus && cfg.at_half(half_guard) {
        return Err(SpiralError::HalfFrequencySingularity { alpha: cfg.alpha, half: cfg.half_frequency() });
    }
    let b = b_constant(cfg.a, cfg.alpha, sign);
    let scale = mode_prefactor(cfg.a, cfg.alpha, sign) * csch(PI * b)?;
    let mut mat = three_case_matrix(b, cfg.branches);
    for row in &mut mat {
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    Ok(mat)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub constants: DerivedConstants,
    #[serde(with = "crate::numerics::complex_json")]
    pub c0: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub c_plus: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub c_minus: C64,
    #[serde(with = "crate::numerics::complex_json::matrix")]
    pub c_mk_plus: Option<Vec<Vec<C64>>>,
    #[serde(with = "crate::numerics::complex_json::matrix")]
    pub c_mk_minus: Option<Vec<Vec<C64>>>,
    pub alpha: f64,
    /// 1/(2a)
    pub half: f64,
    pub at_half: bool,
    pub half_guard: f64,
}

pub fn coefficient_set(cfg: &SpiralConfig) -> Result<CoefficientSet> {
    coefficient_set_with_guard(cfg, DEFAULT_HALF_GUARD)
}

/// Inside the guard c_mk^+ is left absent; c^+ is still evaluated.
pub fn coefficient_set_with_guard(cfg: &SpiralConfig, half_guard: f64) -> Result<CoefficientSet> {
    let at_half = cfg.at_half(half_guard);
    let c_mk_plus = if at_half { None } else { Some(c_mk(cfg, Sign::Plus, half_guard)?) };
    Ok(CoefficientSet {
        constants: derived_constants(cfg.a, cfg.alpha),
        c0: c0(cfg)?,
        c_plus: c_pm(cfg, Sign::Plus)?,
        c_minus: c_pm(cfg, Sign::Minus)?,
        c_mk_plus,
        c_mk_minus: Some(c_mk(cfg, Sign::Minus, half_guard)?),
        alpha: cfg.alpha,
        half: cfg.half_frequency(),
        at_half,
        half_guard,
    })
}

impl CoefficientSet {
    pub fn c(&self, sign: Sign) -> C64 {
        match sign {
            Sign::Plus => self.c_plus,
            Sign::Minus => self.c_minus,
        }
    }

    pub fn c_mk(&self, sign: Sign) -> Result<&Vec<Vec<C64>>> {
        let mat = match sign {
            Sign::Plus => self.c_mk_plus.as_ref(),
            Sign::Minus => self.c_mk_minus.as_ref(),
        };
        mat.ok_or(SpiralError::HalfFrequencySingularity {
            alpha: self.alpha,
            half: self.half,
        })
    }

    /// Largest relative error of g·Σ_k c_mk^± against c^± over all rows.
    pub fn row_sum_error(&self, g: f64, sign: Sign) -> Result<f64> {
        let target = self.c(sign);
        let mat = self.c_mk(sign)?;
        Ok(mat
            .iter()
            .map(|row| (g * pairwise_sum(row) - target).norm() / target.norm())
            .fold(0.0, f64::max))
    }
}

/// Σ_k 𝒜_mk with the three-case rule applied to A.
pub fn a_kernel_sum(a: f64, m_total: usize, m: usize) -> Result<C64> {
    coth_sum_direct(a_constant(a), m_total, m)
}

/// Which residues a partial sum collects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HalfPlane {
    /// Poles with Im σ_j < 0; needs Re B < 0.
    Lower,
    /// Poles with Im σ_j > 0; needs Re B > 0.
    Upper,
}

/// Partial sum of e^{(2πl+Δ)B} over the residues in one half-plane, with the
/// half weight for the pole on the axis when Δ = 0.
pub fn residue_partial_sum_in(b: C64, delta: f64, j: usize, plane: HalfPlane) -> Result<C64> {
    let ratio = match plane {
        HalfPlane::Lower => (2.0 * PI * b.re).exp(),
        HalfPlane::Upper => (-2.0 * PI * b.re).exp(),
    };
    if ratio >= 1.0 {
        return Err(SpiralError::WrongHalfPlane { ratio });
    }
    let term = |l: i64| ((2.0 * PI * l as f64 + delta) * b).exp();
    let ji = j as i64;
    let range: Vec<i64> = match (plane, delta.partial_cmp(&0.0)) {
        (HalfPlane::Lower, Some(std::cmp::Ordering::Greater)) => (0..=ji).collect(),
        (HalfPlane::Lower, _) => (1..=ji).collect(),
        (HalfPlane::Upper, Some(std::cmp::Ordering::Less)) => (-ji..=0).collect(),
        (HalfPlane::Upper, _) => (-ji..=-1).collect(),
    };
    let terms: Vec<C64> = range.into_iter().map(term).collect();
    let half = if delta == 0.0 { c(0.5, 0.0) } else { c(0.0, 0.0) };
    Ok(half + pairwise_sum(&terms))
}

/// Limit of [`residue_partial_sum_in`] as j → ∞: ∓ℬ/(2 sinh πB).
pub fn residue_limit(b: C64, delta: f64, plane: HalfPlane) -> Result<C64> {
    let base = match delta.partial_cmp(&0.0) {
        Some(std::cmp::Ordering::Greater) => ((delta - PI) * b).exp(),
        Some(std::cmp::Ordering::Less) => ((delta + PI) * b).exp(),
        _ => (PI * b).cosh(),
    };
    let v = base * csch(PI * b)? / 2.0;
    Ok(match plane {
        HalfPlane::Lower => -v,
        HalfPlane::Upper => v,
    })
}

/// The half-plane whose residue series converges for B.
pub fn convergent_half_plane(b: C64) -> HalfPlane {
    if b.re < 0.0 {
        HalfPlane::Lower
    } else {
        HalfPlane::Upper
    }
}

/// Residue partial sum for B±(α) of the config in its convergent half-plane.
pub fn residue_partial_sums(cfg: &SpiralConfig, sign: Sign, delta_km: f64, j: usize) -> Result<C64> {
    if j < 1 {
        return Err(SpiralError::InvalidParameter("j must be at least 1".into()));
    }
    let b = b_constant(cfg.a, cfg.alpha, sign);
    residue_partial_sum_in(b, delta_km, j, convergent_half_plane(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(x: C64, y: C64, tol: f64) -> bool {
        (x - y).norm() <= tol * y.norm().max(1e-300)
    }

    #[test]
    fn derived_constant_examples() {
        assert!((a_constant(1.0) - c(-1.0, -1.0)).norm() < 1e-15);
        for a in [0.3, 1.0, 2.0, 7.5, 100.0] {
            assert!((b_constant(a, 0.5 / a, Sign::Plus) - c(0.0, -1.0)).norm() < 1e-15);
        }
        assert!((b_constant(1.0, 0.5, Sign::Minus) - c(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn pinned_coefficients() {
        let cfg = SpiralConfig::new(3, 2.0, 0.3).unwrap();
        let set = coefficient_set(&cfg).unwrap();
        assert!(close(set.c0, c(-0.138_773_209_311_790_08, 0.520_920_093_016_157_4), 1e-13));
        assert!(close(set.c_plus, c(0.239_185_775_845_772_04, 0.357_945_921_504_711_8), 1e-13));
        assert!(close(set.c_minus, c(0.171_425_873_087_249_54, 0.901_819_528_162_413_1), 1e-13));
        assert!(set.row_sum_error(cfg.g, Sign::Plus).unwrap() < 1e-12);
        assert!(set.row_sum_error(cfg.g, Sign::Minus).unwrap() < 1e-12);
    }

    #[test]
    fn diagonal_uses_cosh_branch() {
        let b = c(-0.4, 0.9);
        let mat = three_case_matrix(b, 5);
        for (m, row) in mat.iter().enumerate() {
            assert!((row[m] - (PI * b).cosh()).norm() < 1e-15);
        }
    }

    #[test]
    fn half_guard_behaviour() {
        let cfg = SpiralConfig::new(3, 2.0, 0.25).unwrap();
        let set = coefficient_set(&cfg).unwrap();
        assert!(set.at_half && set.c_mk_plus.is_none());
        assert!(set.c_plus.norm().is_finite());
        assert!(matches!(c_mk(&cfg, Sign::Plus, DEFAULT_HALF_GUARD), Err(SpiralError::HalfFrequencySingularity { .. })));
        assert!(set.c_mk(Sign::Minus).is_ok());
    }

    #[test]
    fn removable_singularity_at_half_frequency() {
        let base = SpiralConfig::new(3, 2.0, 0.25).unwrap();
        let target = c_pm(&base, Sign::Plus).unwrap();
        let mut errs = Vec::new();
        for off in [1e-3, 1e-4, 1e-5] {
            let cfg = base.with_alpha(0.25 + off).unwrap();
            let row: C64 = c_mk(&cfg, Sign::Plus, DEFAULT_HALF_GUARD).unwrap()[0].iter().sum();
            errs.push((cfg.g * row - target).norm());
        }
        assert!(errs[0] / errs[1] > 8.0 && errs[0] / errs[1] < 12.0, "{errs:?}");
        assert!(errs[1] / errs[2] > 8.0 && errs[1] / errs[2] < 12.0, "{errs:?}");
    }

    #[test]
    fn coth_sum_examples() {
        let b = c(-1.0, 0.0);
        let closed = coth_sum_closed_form(b, 3).unwrap();
        let direct = coth_sum_direct(b, 3, 0).unwrap();
        assert!(close(direct, closed, 1e-12));
        for m in 0..3 {
            assert!(close(coth_sum_direct(b, 3, m).unwrap(), direct, 1e-15));
        }
        let r = coth_sum_direct(c(0.7, 0.0), 3, 1).unwrap();
        assert_eq!(r.im, 0.0);
        assert!(matches!(coth_sum_closed_form(c(0.0, 3.0), 3), Err(SpiralError::PoleProximity { .. })));
    }

    #[test]
    fn a_kernel_sum_matches_closed_form() {
        for (m, a) in [(3usize, 2.0), (5, 1.0), (4, 0.7)] {
            let closed = coth_sum_closed_form(a_constant(a), m).unwrap();
            for row in 0..m {
                assert!(close(a_kernel_sum(a, m, row).unwrap(), closed, 1e-12));
            }
        }
    }

    #[test]
    fn residue_sums_converge() {
        // α < 1/(2a): Re B+ < 0, lower half-plane
        let cfg = SpiralConfig::new(3, 2.0, 0.1).unwrap();
        let b = b_constant(2.0, 0.1, Sign::Plus);
        assert!(b.re < 0.0);
        for d in [-2i64, -1, 0, 1, 2] {
            let delta = 2.0 * PI * d as f64 / 3.0;
            let limit = residue_limit(b, delta, HalfPlane::Lower).unwrap();
            let expected = -three_case(b, 3, d) * csch(PI * b).unwrap() / 2.0;
            assert!(close(limit, expected, 1e-14));
            let s = residue_partial_sums(&cfg, Sign::Plus, delta, 50).unwrap();
            assert!(close(s, limit, 1e-10), "d = {d}");
        }
        // α > 1/(2a): upper half-plane
        let b = b_constant(2.0, 0.6, Sign::Plus);
        assert!(b.re > 0.0);
        for d in [-2i64, 0, 1] {
            let delta = 2.0 * PI * d as f64 / 3.0;
            let s = residue_partial_sum_in(b, delta, 50, HalfPlane::Upper).unwrap();
            let limit = residue_limit(b, delta, HalfPlane::Upper).unwrap();
            assert!(close(limit, three_case(b, 3, d) * csch(PI * b).unwrap() / 2.0, 1e-14));
            assert!(close(s, limit, 1e-10));
        }
        assert!(matches!(residue_partial_sum_in(b, 1.0, 5, HalfPlane::Lower), Err(SpiralError::WrongHalfPlane { .. })));
    }

    #[test]
    fn residue_base_cases() {
        let b = c(-0.3, 0.8);
        let d = 2.0 * PI / 3.0;
        let s = residue_partial_sum_in(b, d, 1, HalfPlane::Lower).unwrap();
        assert!(close(s, (d * b).exp() + ((2.0 * PI + d) * b).exp(), 1e-15));
        let s = residue_partial_sum_in(b, 0.0, 1, HalfPlane::Lower).unwrap();
        assert!(close(s, 0.5 + (2.0 * PI * b).exp(), 1e-15));
        let s = residue_partial_sum_in(b, -d, 1, HalfPlane::Lower).unwrap();
        assert!(close(s, ((2.0 * PI - d) * b).exp(), 1e-15));
        let s = residue_partial_sum_in(b, -d, 0, HalfPlane::Lower).unwrap();
        assert_eq!(s, c(0.0, 0.0));
    }

    proptest! {
        #[test]
        fn real_part_signs(a in 0.05f64..100.0, alpha in 0.001f64..5.0) {
            let k = derived_constants(a, alpha);
            prop_assert!(k.a_const.re < 0.0);
            prop_assert!(k.b_minus.re < 0.0);
            let s = (2.0 * a * alpha - 1.0).signum();
            if (2.0 * a * alpha - 1.0).abs() > 1e-12 {
                prop_assert_eq!(k.b_plus.re.signum(), s);
            }
        }

        #[test]
        fn row_sums_and_circulance(m in 3usize..9, a in 0.2f64..20.0, alpha in 0.01f64..3.0) {
            let cfg = SpiralConfig::new(m, a, alpha).unwrap();
            prop_assume!(!cfg.at_half(1e-3));
            let set = coefficient_set(&cfg).unwrap();
            for sign in [Sign::Plus, Sign::Minus] {
                prop_assert!(set.row_sum_error(cfg.g, sign).unwrap() < 1e-10);
                let mat = set.c_mk(sign).unwrap();
                for i in 0..m {
                    for k in 0..m {
                        let a1 = mat[i][k];
                        let a2 = mat[(i + 1) % m][(k + 1) % m];
                        prop_assert!((a1 - a2).norm() <= 1e-12 * a1.norm().max(1e-300));
                    }
                }
            }
        }
    }
}
