//! Poles of 1/(1 − e^{(a+i)σ + iΔ}).

use std::f64::consts::PI;

use crate::numerics::{c, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleLattice {
    pub a: f64,
    pub delta: f64,
}

impl PoleLattice {
    /// Lattice for branch offset d = k − m on M branches.
    pub fn for_branches(a: f64, m_total: usize, d: i64) -> Self {
        Self { a, delta: 2.0 * PI * d as f64 / m_total as f64 }
    }

    /// σ_j = −(2πj + Δ)(1+ai)/(1+a²).
    pub fn sigma(&self, j: i64) -> C64 {
        -(2.0 * PI * j as f64 + self.delta) * c(1.0, self.a) / (1.0 + self.a * self.a)
    }

    /// Indices j with σ_j on the real axis (Δ ≡ 0 mod 2π only).
    pub fn real_axis_indices(&self, radius: f64) -> Vec<i64> {
        let span = (radius * (1.0 + self.a * self.a) / (2.0 * PI)).ceil() as i64 + 1;
        (-span..=span)
            .filter(|&j| {
                let s = self.sigma(j);
                s.im.abs() < 1e-12 && s.re.abs() <= radius
            })
            .collect()
    }

    /// Smallest |Im σ_j| over j, i.e. the distance of the nearest off-axis pole.
    pub fn nearest_off_axis_distance(&self) -> f64 {
        let scale = self.a / (1.0 + self.a * self.a);
        let j0 = (-self.delta / (2.0 * PI)).round() as i64;
        (j0 - 2..=j0 + 2)
            .map(|j| (2.0 * PI * j as f64 + self.delta) * scale)
            .filter(|d| d.abs() > 1e-12)
            .map(f64::abs)
            .fold(f64::INFINITY, f64::min)
    }

    /// Local minima of |1 − e^{(a+i)σ+iΔ}| below `threshold` on a uniform grid.
    pub fn scan_real_axis(&self, radius: f64, n: usize, threshold: f64) -> Vec<f64> {
        let z = c(self.a, 1.0);
        let h = 2.0 * radius / n as f64;
        let val = |s: f64| (1.0 - (z * s + c(0.0, self.delta)).exp()).norm();
        (1..n)
            .filter_map(|i| {
                let s = -radius + h * i as f64;
                let (l, m, r) = (val(s - h), val(s), val(s + h));
                (m <= l && m <= r && m < threshold).then_some(s)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_the_diagonal_term_has_a_real_pole() {
        for (a, m) in [(2.0, 3usize), (0.5, 4), (10.0, 5)] {
            let r = 40.0 / a;
            let diag = PoleLattice::for_branches(a, m, 0);
            assert_eq!(diag.real_axis_indices(r), vec![0]);
            assert!(diag.sigma(0).norm() == 0.0);
            let found = diag.scan_real_axis(r, 40_001, 1e-2);
            assert_eq!(found.len(), 1);
            assert!(found[0].abs() < 1e-2);
            for d in 1..m as i64 {
                for lat in [PoleLattice::for_branches(a, m, d), PoleLattice::for_branches(a, m, -d)] {
                    assert!(lat.real_axis_indices(r).is_empty());
                    // a near-axis pole at distance δ gives a minimum of order a·δ
                    let dist = lat.nearest_off_axis_distance();
                    assert!(lat.scan_real_axis(r, 40_001, 0.1 * dist).is_empty());
                    let expected = 2.0 * PI / m as f64 * a / (1.0 + a * a);
                    assert!(dist >= expected * (1.0 - 1e-12));
                }
            }
        }
    }
}
