//! Log-time integration of the reduced, hat and full amplitude systems and
//! growth-rate fitting.
//!
//! The reduced and full systems involve complex conjugates, so they are only
//! ℝ-linear. Every system is therefore integrated as a real linear system
//! y′ = A y of twice the complex dimension.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{c0, c_pm, coefficient_set};
use crate::error::{Result, SpiralError};
use crate::numerics::{c, C64, I};
use crate::spiral::{check_compatibility, PerturbationWeights, Sign, SpiralConfig};
use crate::stability::{beta, stability_from_coefficients};

/// Accepted difference between n and 2n substeps over a whole run, relative
/// to max(1, ‖y‖); each output interval gets its share by length.
pub const STEP_TOL: f64 = 1e-10;
/// Substeps allowed per output interval before giving up.
pub const MAX_SUBSTEPS: usize = 1 << 20;
pub const MIN_FIT_SAMPLES: usize = 20;

/// Dense real linear system y′ = A y.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFlow {
    n: usize,
    a: Vec<f64>,
}

impl LinearFlow {
    /// Zero system on `complex_dim` complex unknowns.
    pub fn new(complex_dim: usize) -> Self {
        let n = 2 * complex_dim;
        Self { n, a: vec![0.0; n * n] }
    }

    pub fn real_dim(&self) -> usize {
        self.n
    }

    /// Row-major real matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.a
    }

    fn add(&mut self, r: usize, col: usize, v: f64) {
        self.a[r * self.n + col] += v;
    }

    /// z_i′ += coef·z_j
    pub fn add_linear(&mut self, i: usize, j: usize, coef: C64) {
        let (r, s) = (2 * i, 2 * j);
        self.add(r, s, coef.re);
        self.add(r, s + 1, -coef.im);
        self.add(r + 1, s, coef.im);
        self.add(r + 1, s + 1, coef.re);
    }

    /// z_i′ += coef·z_j*
    pub fn add_conjugate(&mut self, i: usize, j: usize, coef: C64) {
        let (r, s) = (2 * i, 2 * j);
        self.add(r, s, coef.re);
        self.add(r, s + 1, coef.im);
        self.add(r + 1, s, coef.im);
        self.add(r + 1, s + 1, -coef.re);
    }

    fn apply(&self, y: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.a[r * self.n..(r + 1) * self.n];
            *o = row.iter().zip(y).map(|(p, q)| p * q).sum();
        }
    }

    fn rk4(&self, y: &mut [f64], h: f64, n_steps: usize) {
        let n = self.n;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for _ in 0..n_steps {
            self.apply(y, &mut k1);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            self.apply(&tmp, &mut k2);
            for i in 0..n {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            self.apply(&tmp, &mut k3);
            for i in 0..n {
                tmp[i] = y[i] + h * k3[i];
            }
            self.apply(&tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }

    /// Advances across [s0, s1] (either direction), doubling the substep
    /// count from `hint` until n and 2n substeps agree. Returns the count used.
    fn advance(&self, y: &mut Vec<f64>, s0: f64, s1: f64, share: f64, hint: usize) -> Result<usize> {
        let mut n = hint.max(1);
        let tol = STEP_TOL * share;
        loop {
            let mut coarse = y.clone();
            self.rk4(&mut coarse, (s1 - s0) / n as f64, n);
            let mut fine = y.clone();
            self.rk4(&mut fine, (s1 - s0) / (2 * n) as f64, 2 * n);
            let diff = coarse.iter().zip(&fine).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            let size = fine.iter().map(|v| v.abs()).fold(0.0, f64::max);
            if diff <= tol * size.max(1.0) {
                // one Richardson step lifts the fourth-order pair to fifth order
                *y = fine.iter().zip(&coarse).map(|(f, c)| f + (f - c) / 15.0).collect();
                return Ok(n);
            }
            if 2 * n >= MAX_SUBSTEPS {
                return Err(SpiralError::StepLimit { steps: 2 * n, tol });
            }
            n *= 2;
        }
    }

    /// State at s1 starting from `state` at s0; s1 may lie before s0.
    pub fn propagate(&self, state: &[C64], s0: f64, s1: f64, intervals: usize) -> Result<Vec<C64>> {
        let mut y = to_real(state, self.n)?;
        let intervals = intervals.max(1);
        let mut hint = 1;
        for i in 0..intervals {
            let a = s0 + (s1 - s0) * i as f64 / intervals as f64;
            let b = s0 + (s1 - s0) * (i + 1) as f64 / intervals as f64;
            hint = self.advance(&mut y, a, b, 1.0 / intervals as f64, hint)?;
        }
        Ok(to_complex(&y))
    }

    fn trajectory(&self, init: &[C64], span: (f64, f64), steps: usize) -> Result<Vec<Sample>> {
        check_span(span, steps)?;
        let mut y = to_real(init, self.n)?;
        let mut samples = Vec::with_capacity(steps + 1);
        samples.push(Sample { s: span.0, state: init.to_vec() });
        let mut hint = 1;
        for i in 0..steps {
            let a = span.0 + (span.1 - span.0) * i as f64 / steps as f64;
            let b = if i + 1 == steps { span.1 } else { span.0 + (span.1 - span.0) * (i + 1) as f64 / steps as f64 };
            hint = self.advance(&mut y, a, b, 1.0 / steps as f64, hint)?;
            samples.push(Sample { s: b, state: to_complex(&y) });
        }
        Ok(samples)
    }
}

fn to_real(state: &[C64], n: usize) -> Result<Vec<f64>> {
    if 2 * state.len() != n {
        return Err(SpiralError::LengthMismatch { expected: n / 2, got: state.len() });
    }
    Ok(state.iter().flat_map(|z| [z.re, z.im]).collect())
}

fn to_complex(y: &[f64]) -> Vec<C64> {
    y.chunks(2).map(|p| c(p[0], p[1])).collect()
}

fn check_span(span: (f64, f64), steps: usize) -> Result<()> {
    if steps < 10 {
        return Err(SpiralError::InvalidParameter(format!("{steps} steps; at least 10 required")));
    }
    if !(span.1 > span.0) || !span.0.is_finite() || !span.1.is_finite() {
        return Err(SpiralError::InvalidParameter(format!("log-time span {span:?} must be increasing")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Reduced,
    Hat,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub s: f64,
    #[serde(with = "crate::numerics::complex_json::vec")]
    pub state: Vec<C64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub config: Option<SpiralConfig>,
    pub samples: Vec<Sample>,
    /// Full runs: whether the initial weights met the compatibility conditions.
    pub compatible_init: Option<bool>,
    /// Full runs: largest compatibility residual seen along the trajectory,
    /// relative to the state size.
    pub max_compat_drift: Option<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories are never empty")
    }

    /// `s,re_0,im_0,…` with one row per sample.
    pub fn to_csv(&self) -> String {
        let dim = self.samples.first().map_or(0, |s| s.state.len());
        let mut out = String::from("s");
        for i in 0..dim {
            out.push_str(&format!(",re_{i},im_{i}"));
        }
        out.push('\n');
        for smp in &self.samples {
            out.push_str(&smp.s.to_string());
            for z in &smp.state {
                out.push_str(&format!(",{},{}", z.re, z.im));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trajectories serialise")
    }
}

/// Coefficients of X′ = −iβX − (c₀−c⁻)*Y*, Y′ = −iβY − (c₀−c⁺)*X*.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    #[serde(with = "crate::numerics::complex_json")]
    pub c0: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub c_plus: C64,
    #[serde(with = "crate::numerics::complex_json")]
    pub c_minus: C64,
    pub beta: f64,
}

impl ReducedSystem {
    pub fn from_config(cfg: &SpiralConfig) -> Result<Self> {
        Ok(Self { c0: c0(cfg)?, c_plus: c_pm(cfg, Sign::Plus)?, c_minus: c_pm(cfg, Sign::Minus)?, beta: beta(cfg) })
    }

    /// P = (c₀−c⁻)*(c₀−c⁺) and q = 2β.
    pub fn p_q(&self) -> (C64, f64) {
        ((self.c0 - self.c_minus).conj() * (self.c0 - self.c_plus), 2.0 * self.beta)
    }

    pub fn flow(&self) -> LinearFlow {
        let mut f = LinearFlow::new(2);
        f.add_linear(0, 0, -I * self.beta);
        f.add_conjugate(0, 1, -(self.c0 - self.c_minus).conj());
        f.add_linear(1, 1, -I * self.beta);
        f.add_conjugate(1, 0, -(self.c0 - self.c_plus).conj());
        f
    }

    /// Growth exponent of this system.
    pub fn delta(&self) -> f64 {
        stability_from_coefficients(self.c0, self.c_plus, self.c_minus, 2.0 * self.beta).delta
    }

    /// (X̂, Ŷ) at s from (X, Y): X̂ = e^{iβs}X, Ŷ = −(c₀−c⁻)* e^{iβs} Y*.
    pub fn to_hat(&self, s: f64, xy: [C64; 2]) -> [C64; 2] {
        let e = (I * self.beta * s).exp();
        [e * xy[0], -(self.c0 - self.c_minus).conj() * e * xy[1].conj()]
    }

    /// Inverse of [`ReducedSystem::to_hat`]; needs c₀ ≠ c⁻.
    pub fn from_hat(&self, s: f64, hat: [C64; 2]) -> [C64; 2] {
        let d = self.c0 - self.c_minus;
        [(-I * self.beta * s).exp() * hat[0], -(I * self.beta * s).exp() * hat[1].conj() / d]
    }
}

pub fn integrate_reduced(cfg: &SpiralConfig, x0: C64, y0: C64, s_span: (f64, f64), steps: usize) -> Result<Trajectory> {
    let sys = ReducedSystem::from_config(cfg)?;
    let mut tr = integrate_reduced_system(&sys, x0, y0, s_span, steps)?;
    tr.config = Some(*cfg);
    Ok(tr)
}

/// Reduced integration for explicit (possibly synthetic) coefficients.
pub fn integrate_reduced_system(sys: &ReducedSystem, x0: C64, y0: C64, s_span: (f64, f64), steps: usize) -> Result<Trajectory> {
    let samples = sys.flow().trajectory(&[x0, y0], s_span, steps)?;
    Ok(Trajectory { kind: TrajectoryKind::Reduced, config: None, samples, compatible_init: None, max_compat_drift: None })
}

/// Autonomous hat system X̂′ = Ŷ, Ŷ′ = P X̂ + iq Ŷ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HatSystem {
    pub p: C64,
    pub q: f64,
}

impl HatSystem {
    pub fn from_config(cfg: &SpiralConfig) -> Result<Self> {
        let (p, q) = ReducedSystem::from_config(cfg)?.p_q();
        Ok(Self { p, q })
    }

    pub fn flow(&self) -> LinearFlow {
        let mut f = LinearFlow::new(2);
        f.add_linear(0, 1, c(1.0, 0.0));
        f.add_linear(1, 0, self.p);
        f.add_linear(1, 1, c(0.0, self.q));
        f
    }

    pub fn eigenvalues(&self) -> (C64, C64) {
        crate::stability::reduced_eigenvalues(self.p, self.q)
    }

    /// exp(sA)·init by the two-eigenvalue interpolation formula, with the
    /// confluent form when the eigenvalues coincide.
    pub fn exact(&self, init: [C64; 2], s: f64) -> [C64; 2] {
        let (l1, l2) = self.eigenvalues();
        let av = |v: [C64; 2]| [v[1], self.p * v[0] + c(0.0, self.q) * v[1]];
        let sub = |v: [C64; 2], l: C64| {
            let w = av(v);
            [w[0] - l * v[0], w[1] - l * v[1]]
        };
        let scale = l1.norm().max(l2.norm()).max(1.0);
        if (l1 - l2).norm() <= 1e-9 * scale {
            let l = 0.5 * (l1 + l2);
            let e = (l * s).exp();
            let d = sub(init, l);
            return [e * (init[0] + s * d[0]), e * (init[1] + s * d[1])];
        }
        let (e1, e2) = ((l1 * s).exp(), (l2 * s).exp());
        let (d2, d1) = (sub(init, l2), sub(init, l1));
        let k = 1.0 / (l1 - l2);
        [k * (e1 * d2[0] - e2 * d1[0]), k * (e1 * d2[1] - e2 * d1[1])]
    }
}

pub fn integrate_hat(cfg: &SpiralConfig, init: [C64; 2], s_span: (f64, f64), steps: usize) -> Result<Trajectory> {
    let sys = HatSystem::from_config(cfg)?;
    let samples = sys.flow().trajectory(&init, s_span, steps)?;
    Ok(Trajectory { kind: TrajectoryKind::Hat, config: Some(*cfg), samples, compatible_init: None, max_compat_drift: None })
}

/// Real system for the 2M amplitudes ordered X₀…X_{M−1}, Y₀…Y_{M−1}.
pub fn full_flow(cfg: &SpiralConfig) -> Result<LinearFlow> {
    let m = cfg.branches;
    let set = coefficient_set(cfg)?;
    let cp = set.c_mk(Sign::Plus)?;
    let cm = set.c_mk(Sign::Minus)?;
    let b = beta(cfg);
    let mut f = LinearFlow::new(2 * m);
    for i in 0..m {
        f.add_linear(i, i, -I * b);
        f.add_linear(m + i, m + i, -I * b);
        f.add_conjugate(i, m + i, -set.c0.conj());
        f.add_conjugate(m + i, i, -set.c0.conj());
        for k in 0..m {
            f.add_conjugate(i, m + k, cfg.g * cm[i][k].conj());
            f.add_conjugate(m + i, k, cfg.g * cp[i][k].conj());
        }
    }
    Ok(f)
}

pub fn integrate_full(cfg: &SpiralConfig, weights0: &PerturbationWeights, s_span: (f64, f64), steps: usize) -> Result<Trajectory> {
    let m = cfg.branches;
    check_compatibility(weights0, m)?;
    let init: Vec<C64> = weights0.x.iter().chain(&weights0.y).cloned().collect();
    let samples = full_flow(cfg)?.trajectory(&init, s_span, steps)?;
    let mut drift: f64 = 0.0;
    for smp in &samples {
        let w = PerturbationWeights::new(smp.state[..m].to_vec(), smp.state[m..].to_vec())?;
        let size = smp.state.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        drift = drift.max(w.r1.max(w.r2) / size);
    }
    Ok(Trajectory {
        kind: TrajectoryKind::Full,
        config: Some(*cfg),
        samples,
        compatible_init: Some(weights0.valid),
        max_compat_drift: Some(drift),
    })
}

/// Deterministic generic complex vector with entries uniform in the unit square.
pub fn random_state(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub delta_fit: f64,
    pub r_squared: f64,
    pub samples: usize,
}

/// Least-squares slope of ln‖state‖∞ against s on the window.
pub fn fit_growth(traj: &Trajectory, window: (f64, f64)) -> Result<GrowthFit> {
    let pts: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|p| p.s >= window.0 && p.s <= window.1)
        .map(|p| (p.s, p.state.iter().map(|z| z.norm()).fold(0.0, f64::max).ln()))
        .collect();
    let first = traj.samples.first().map_or(f64::NAN, |p| p.s);
    let last = traj.samples.last().map_or(f64::NAN, |p| p.s);
    if pts.len() < MIN_FIT_SAMPLES || window.0 < first || window.1 > last || pts.iter().any(|p| !p.1.is_finite()) {
        return Err(SpiralError::WindowTooSmall { lo: window.0, hi: window.1, samples: pts.len(), required: MIN_FIT_SAMPLES });
    }
    Ok(fit_line(&pts))
}

fn fit_line(pts: &[(f64, f64)]) -> GrowthFit {
    let n = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    GrowthFit { delta_fit: slope, r_squared, samples: pts.len() }
}
