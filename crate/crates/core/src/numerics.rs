//! Complex elementary functions with pole guards, compensated sums and
//! Gauss–Legendre rules.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Result, SpiralError};

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Default guard for coth/csch arguments near `i*pi*Z`.
pub const POLE_GUARD: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(z) - 1` without cancellation for small `|z|`.
pub fn cexpm1(z: C64) -> C64 {
    let (x, y) = (z.re, z.im);
    let half = (0.5 * y).sin();
    let re = x.exp_m1() * y.cos() - 2.0 * half * half;
    let im = x.exp() * y.sin();
    c(re, im)
}

/// `1 / (1 - exp(z))`, overflow-free for large `Re z`.
pub fn inv_one_minus_exp(z: C64) -> C64 {
    if z.re > 0.0 {
        let w = (-z).exp();
        w / cexpm1(-z)
    } else {
        -1.0 / cexpm1(z)
    }
}

/// Distance from `z` to the nearest point of `i*pi*Z`.
pub fn distance_to_pole_lattice(z: C64) -> f64 {
    let n = (z.im / PI).round();
    (z - c(0.0, n * PI)).norm()
}

/// coth with the overflow-safe branch selection: `(e^{2z}+1)/(e^{2z}-1)` for
/// `Re z < 0`, `(1+e^{-2z})/(1-e^{-2z})` otherwise.
pub fn coth(z: C64) -> Result<C64> {
    coth_guarded(z, POLE_GUARD)
}

pub fn coth_guarded(z: C64, guard: f64) -> Result<C64> {
    if distance_to_pole_lattice(z) < guard {
        return Err(SpiralError::PoleProximity {
            z: format!("{z}"),
            guard,
        });
    }
    Ok(coth_unchecked(z))
}

pub(crate) fn coth_unchecked(z: C64) -> C64 {
    if z.re < 0.0 {
        let e = (2.0 * z).exp();
        (e + 1.0) / cexpm1(2.0 * z)
    } else {
        let e = (-2.0 * z).exp();
        -(1.0 + e) / cexpm1(-2.0 * z)
    }
}

/// `1/sinh(z)` with the same pole guard as [`coth`].
pub fn csch(z: C64) -> Result<C64> {
    if distance_to_pole_lattice(z) < POLE_GUARD {
        return Err(SpiralError::PoleProximity {
            z: format!("{z}"),
            guard: POLE_GUARD,
        });
    }
    Ok(1.0 / z.sinh())
}

/// Pairwise summation; keeps roots-of-unity cancellations near 1e-16.
pub fn pairwise_sum(values: &[C64]) -> C64 {
    if values.len() <= 8 {
        return values.iter().fold(C64::new(0.0, 0.0), |acc, v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Nodes and weights of the n-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Newton iteration on the three-term Legendre recurrence.
    pub fn compute(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Shared, lazily computed rule of order `n`.
    pub fn shared(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("Gauss-Legendre cache poisoned");
        guard
            .entry(n)
            .or_insert_with(|| Arc::new(GaussLegendre::compute(n)))
            .clone()
    }

    pub fn integrate<F>(&self, lo: f64, hi: f64, f: F) -> C64
    where
        F: Fn(f64) -> C64,
    {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        let mut acc = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += *w * f(mid + half * x);
        }
        acc * half
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Serde adapter writing complex numbers as `{"re": .., "im": ..}`.
pub mod complex_json {
    use super::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        Repr { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        let r = Repr::deserialize(d)?;
        Ok(C64::new(r.re, r.im))
    }

    pub mod vec {
        use super::{Repr, C64};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(v: &[C64], s: S) -> Result<S::Ok, S::Error> {
            let reprs: Vec<Repr> = v.iter().map(|z| Repr { re: z.re, im: z.im }).collect();
            reprs.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<C64>, D::Error> {
            let reprs = Vec::<Repr>::deserialize(d)?;
            Ok(reprs.into_iter().map(|r| C64::new(r.re, r.im)).collect())
        }
    }

    pub mod matrix {
        use super::{Repr, C64};
        use serde::{Deserialize, Deserializer, Serialize, Serializer};

        pub fn serialize<S: Serializer>(m: &Option<Vec<Vec<C64>>>, s: S) -> Result<S::Ok, S::Error> {
            let reprs: Option<Vec<Vec<Repr>>> = m.as_ref().map(|rows| {
                rows.iter()
                    .map(|row| row.iter().map(|z| Repr { re: z.re, im: z.im }).collect())
                    .collect()
            });
            reprs.serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<Vec<C64>>>, D::Error> {
            let reprs = Option::<Vec<Vec<Repr>>>::deserialize(d)?;
            Ok(reprs.map(|rows| {
                rows.into_iter()
                    .map(|row| row.into_iter().map(|r| C64::new(r.re, r.im)).collect())
                    .collect()
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::compute(32);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
        // degree 62 monomial: integral over [-1,1] is 2/63
        let v = rule.integrate(-1.0, 1.0, |t| c(t.powi(62), 0.0));
        assert!((v.re - 2.0 / 63.0).abs() < 1e-14);
        let odd = GaussLegendre::compute(5);
        assert_eq!(odd.nodes[2], 0.0);
        let v = odd.integrate(0.0, 2.0, |t| c(t.powi(9), 0.0));
        assert!((v.re - 102.4).abs() < 1e-11);
    }

    #[test]
    fn coth_matches_naive_on_moderate_arguments() {
        for &(re, im) in &[(0.3, 0.2), (-1.2, 2.5), (4.9, -0.1), (-3.0, -3.0), (0.0, 1.0)] {
            let z = c(re, im);
            let naive = z.cosh() / z.sinh();
            let v = coth(z).unwrap();
            assert!((v - naive).norm() <= 1e-13 * naive.norm().max(1.0), "{z}");
        }
        // no overflow far from the origin
        assert!((coth(c(800.0, 1.0)).unwrap() - 1.0).norm() < 1e-15);
        assert!((coth(c(-800.0, 1.0)).unwrap() + 1.0).norm() < 1e-15);
    }

    #[test]
    fn coth_refuses_lattice_points() {
        assert!(matches!(coth(c(0.0, PI)), Err(SpiralError::PoleProximity { .. })));
        assert!(matches!(coth(c(1e-13, 0.0)), Err(SpiralError::PoleProximity { .. })));
        assert!(coth(c(1e-9, 0.0)).is_ok());
        assert!(csch(c(0.0, -2.0 * PI)).is_err());
    }

    #[test]
    fn expm1_is_accurate_near_zero() {
        let z = c(1e-10, -2e-10);
        let v = cexpm1(z);
        let expected = z + z * z / 2.0;
        assert!((v - expected).norm() < 1e-25);
        let big = c(3.0, 1.0);
        assert!((cexpm1(big) - (big.exp() - 1.0)).norm() < 1e-13);
    }

    #[test]
    fn inv_one_minus_exp_both_branches() {
        for &z in &[c(0.5, 0.3), c(-0.5, 2.0), c(40.0, 1.0), c(-40.0, 0.2)] {
            let naive = 1.0 / (1.0 - z.exp());
            assert!((inv_one_minus_exp(z) - naive).norm() <= 1e-14 * naive.norm().max(1e-300));
        }
        assert!(inv_one_minus_exp(c(900.0, 0.0)).norm() < 1e-300);
    }
}
