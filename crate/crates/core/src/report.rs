//! Consolidated verification reports and run manifests. Reports are built
//! from deterministic computations and serialised with a fixed field order,
//! so repeated runs give byte-identical JSON.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{c_pm, coefficient_set_with_guard, coth_sum_closed_form, coth_sum_direct, derived_constants, three_case};
use crate::error::{Result, SpiralError};
use crate::numerics::{c, C64, I};
use crate::ode::{fit_growth, integrate_full, integrate_reduced};
use crate::operator::{apply_J_numeric, apply_J_via_pv, apply_K_numeric, linearized_residual, AmplitudePath, AnsatzPerturbation};
use crate::quadrature::{verify_a_pv_integral, verify_k_integral, verify_mode_integral, IdentityCheck, QuadratureSpec, SpiralIntegrals};
use crate::spiral::{PerturbationWeights, Sign, SpiralConfig, DEFAULT_HALF_GUARD};
use crate::stability::{stability_analysis, EigenSolution, StabilityResult};

/// Tolerance for the quadrature identities.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Tolerance for the numeric operator actions.
pub const OPERATOR_TOL: f64 = 1e-5;
pub const RESIDUAL_TOL: f64 = 1e-4;
/// Detuned solutions must miss the equation by at least this relative amount.
pub const NEGATIVE_CONTROL_MIN: f64 = 0.1;
pub const ALGEBRA_TOL: f64 = 1e-10;
pub const GROWTH_REL_TOL: f64 = 0.01;
pub const SYMMETRY_TOL: f64 = 1e-9;
pub const SKIPPED_AT_HALF: &str = "SKIPPED(at_half)";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub name: String,
    /// PASS, FAIL, ERROR or SKIPPED(at_half).
    pub status: String,
    #[serde(with = "opt_complex", skip_serializing_if = "Option::is_none", default)]
    pub numeric: Option<C64>,
    #[serde(with = "opt_complex", skip_serializing_if = "Option::is_none", default)]
    pub closed: Option<C64>,
    pub value: Option<f64>,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub detail: Option<String>,
}

mod opt_complex {
    use crate::numerics::C64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        re: f64,
        im: f64,
    }

    pub fn serialize<S: Serializer>(z: &Option<C64>, s: S) -> Result<S::Ok, S::Error> {
        z.map(|z| Repr { re: z.re, im: z.im }).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<C64>, D::Error> {
        Ok(Option::<Repr>::deserialize(d)?.map(|r| C64::new(r.re, r.im)))
    }
}

impl CheckEntry {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let status = if value < tolerance { "PASS" } else { "FAIL" };
        Self { name: name.into(), status: status.into(), numeric: None, closed: None, value: Some(value), tolerance, detail: None }
    }

    /// Passes when `value > tolerance`.
    pub fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        let mut e = Self::below(name, value, tolerance);
        e.status = if value > tolerance { "PASS" } else { "FAIL" }.into();
        e
    }

    pub fn identity(check: &IdentityCheck, tolerance: f64) -> Self {
        let mut e = Self::below(check.identity.clone(), check.rel_err, tolerance);
        e.numeric = Some(check.numeric);
        e.closed = Some(check.closed);
        e
    }

    pub fn skipped(name: impl Into<String>, tolerance: f64) -> Self {
        Self { name: name.into(), status: SKIPPED_AT_HALF.into(), numeric: None, closed: None, value: None, tolerance, detail: None }
    }

    pub fn error(name: impl Into<String>, tolerance: f64, err: &SpiralError) -> Self {
        Self {
            name: name.into(),
            status: "ERROR".into(),
            numeric: None,
            closed: None,
            value: None,
            tolerance,
            detail: Some(err.to_string()),
        }
    }

    pub fn failed(&self) -> bool {
        self.status == "FAIL" || self.status == "ERROR"
    }

    fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

fn entry_or_error(name: &str, tol: f64, r: Result<CheckEntry>) -> CheckEntry {
    r.unwrap_or_else(|e| CheckEntry::error(name, tol, &e))
}

fn at_half(cfg: &SpiralConfig) -> bool {
    cfg.at_half(DEFAULT_HALF_GUARD)
}

/// Quadrature identity table for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: SpiralConfig,
    pub spec: QuadratureSpec,
    pub at_half: bool,
    pub entries: Vec<CheckEntry>,
    pub all_pass: bool,
}

/// Symmetric-weight plus-mode integral against the aggregate c⁺, which stays
/// finite at α = 1/(2a) where the per-branch c_mk⁺ do not.
pub fn verify_aggregate_plus(cfg: &SpiralConfig, spec: &QuadratureSpec) -> Result<IdentityCheck> {
    let ones = vec![c(1.0, 0.0); cfg.branches];
    let numeric = SpiralIntegrals::new(cfg, 0, spec)?.mode_pv(Sign::Plus, &ones)?;
    let a = cfg.a;
    let closed = -(PI * I / (a * a)) * c(a, 1.0) / c(1.0, 2.0 * cfg.alpha) * c_pm(cfg, Sign::Plus)? / cfg.g;
    Ok(IdentityCheck::new("aggregate c+ mode integral", numeric, closed))
}

pub fn verify_report(cfg: &SpiralConfig, spec: &QuadratureSpec) -> VerifyReport {
    let half = at_half(cfg);
    let sym = PerturbationWeights::symmetric(cfg.branches, c(1.0, 0.0), c(1.0, 0.0));
    let mut entries = vec![
        entry_or_error("K finite-part integral", IDENTITY_TOL, verify_k_integral(cfg, spec).map(|k| CheckEntry::identity(&k, IDENTITY_TOL))),
        entry_or_error(
            "mode integral (−)",
            IDENTITY_TOL,
            verify_mode_integral(cfg, Sign::Minus, &sym, spec).map(|k| CheckEntry::identity(&k, IDENTITY_TOL)),
        ),
    ];
    if half {
        entries.push(CheckEntry::skipped("mode integral (+)", IDENTITY_TOL));
    } else {
        entries.push(entry_or_error(
            "mode integral (+)",
            IDENTITY_TOL,
            verify_mode_integral(cfg, Sign::Plus, &sym, spec).map(|k| CheckEntry::identity(&k, IDENTITY_TOL)),
        ));
    }
    entries.push(entry_or_error(
        "aggregate c+ mode integral",
        IDENTITY_TOL,
        verify_aggregate_plus(cfg, spec).map(|k| CheckEntry::identity(&k, IDENTITY_TOL)),
    ));
    entries.push(entry_or_error(
        "A-kernel principal value",
        IDENTITY_TOL,
        verify_a_pv_integral(cfg, spec).map(|k| CheckEntry::identity(&k, IDENTITY_TOL)),
    ));
    let set = coefficient_set_with_guard(cfg, DEFAULT_HALF_GUARD);
    for sign in [Sign::Plus, Sign::Minus] {
        let name = format!("row sums g·Σc_mk({}) = c({})", sign.label(), sign.label());
        if half && sign == Sign::Plus {
            entries.push(CheckEntry::skipped(name, ALGEBRA_TOL));
            continue;
        }
        let r = set.as_ref().map_err(Clone::clone).and_then(|s| s.row_sum_error(cfg.g, sign));
        entries.push(entry_or_error(&name, ALGEBRA_TOL, r.map(|v| CheckEntry::below(name.clone(), v, ALGEBRA_TOL))));
    }
    let consts = derived_constants(cfg.a, cfg.alpha);
    for sign in [Sign::Plus, Sign::Minus] {
        let name = format!("coth sum B({})", sign.label());
        let b = consts.b(sign);
        let r = (|| {
            let closed = coth_sum_closed_form(b, cfg.branches)?;
            // normalised by the largest term too: at α = 1/(2a) both sides vanish
            let big = (0..cfg.branches as i64).map(|d| three_case(b, cfg.branches, d).norm()).fold(closed.norm(), f64::max);
            let mut worst: f64 = 0.0;
            for m in 0..cfg.branches {
                let d = coth_sum_direct(b, cfg.branches, m)?;
                worst = worst.max((d - closed).norm() / big);
            }
            Ok(CheckEntry::below(name.clone(), worst, 1e-12))
        })();
        entries.push(entry_or_error(&name, 1e-12, r));
    }
    let all_pass = entries.iter().all(|e| !e.failed());
    VerifyReport { config: *cfg, spec: spec.clone(), at_half: half, entries, all_pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorRow {
    pub m: usize,
    pub theta: f64,
    pub k: CheckEntry,
    pub j: CheckEntry,
    pub j_via_pv: CheckEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorReport {
    pub config: SpiralConfig,
    pub t: f64,
    pub rows: Vec<OperatorRow>,
    pub eigen_residual: CheckEntry,
    pub negative_control: CheckEntry,
    pub all_pass: bool,
}

/// θ samples used per branch by the operator table.
pub const OPERATOR_THETAS: [f64; 2] = [0.0, 1.0];

/// Operator actions at every (m, θ) sample for X ≡ Y ≡ 1 at t = 1, plus the
/// linearised residual of the dominant eigen-solution and its detuned copy.
pub fn operator_report(cfg: &SpiralConfig, spec: &QuadratureSpec) -> OperatorReport {
    let half = at_half(cfg);
    let t = 1.0;
    let pert = AnsatzPerturbation::new(*cfg, PerturbationWeights::symmetric(cfg.branches, c(1.0, 0.0), c(1.0, 0.0)), t)
        .expect("symmetric perturbation of a valid config");
    let as_entry = |name: String, r: Result<crate::operator::OperatorValue>| match r {
        Ok(v) => {
            let mut e = CheckEntry::below(name, v.rel_err, OPERATOR_TOL);
            e.numeric = Some(v.numeric);
            e.closed = Some(v.closed);
            e
        }
        Err(err) => CheckEntry::error(name, OPERATOR_TOL, &err),
    };
    let mut rows = vec![];
    for m in 0..cfg.branches {
        for &theta in &OPERATOR_THETAS {
            let k = as_entry(format!("K m={m} θ={theta}"), apply_K_numeric(&pert, m, theta, spec));
            let (j, jp) = if half {
                (CheckEntry::skipped(format!("J m={m} θ={theta}"), OPERATOR_TOL), CheckEntry::skipped(format!("J via pv m={m} θ={theta}"), OPERATOR_TOL))
            } else {
                (
                    as_entry(format!("J m={m} θ={theta}"), apply_J_numeric(&pert, m, theta, spec)),
                    as_entry(format!("J via pv m={m} θ={theta}"), apply_J_via_pv(&pert, m, theta, spec)),
                )
            };
            rows.push(OperatorRow { m, theta, k, j, j_via_pv: jp });
        }
    }
    let (eigen_residual, negative_control) = if half {
        (CheckEntry::skipped("eigen-solution residual", RESIDUAL_TOL), CheckEntry::skipped("detuned residual", NEGATIVE_CONTROL_MIN))
    } else {
        let run = |y_scale: f64| -> Result<f64> {
            let e = EigenSolution::dominant(cfg)?;
            let path = AmplitudePath::symmetric(
                cfg.branches,
                move |s| e.x(s),
                move |s| y_scale * e.y(s),
                move |s| e.dx(s),
                move |s| y_scale * e.dy(s),
            );
            Ok(linearized_residual(cfg, &path, t, 0.0, spec)?.relative())
        };
        (
            entry_or_error("eigen-solution residual", RESIDUAL_TOL, run(1.0).map(|v| CheckEntry::below("eigen-solution residual", v, RESIDUAL_TOL))),
            entry_or_error(
                "detuned residual",
                NEGATIVE_CONTROL_MIN,
                run(2.0).map(|v| CheckEntry::above("detuned residual", v, NEGATIVE_CONTROL_MIN)),
            ),
        )
    };
    let all_pass = rows.iter().all(|r| !r.k.failed() && !r.j.failed() && !r.j_via_pv.failed())
        && !eigen_residual.failed()
        && !negative_control.failed();
    OperatorReport { config: *cfg, t, rows, eigen_residual, negative_control, all_pass }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub delta: f64,
    pub delta_fit: Option<f64>,
    pub r_squared: Option<f64>,
    pub growth: CheckEntry,
    pub full_vs_reduced: CheckEntry,
}

/// Eigenvector run of the reduced system over s ∈ [0, 10] with a fit on
/// [5, 10], and a symmetric full run compared against it.
pub fn simulation_report(cfg: &SpiralConfig) -> Result<SimulationReport> {
    let delta = stability_analysis(cfg)?.delta;
    let e = EigenSolution::dominant(cfg)?;
    let (x0, y0) = (e.x(0.0), e.y(0.0));
    let red = integrate_reduced(cfg, x0, y0, (0.0, 10.0), 200)?;
    let fit = fit_growth(&red, (5.0, 10.0))?;
    let growth = if delta > 1e-3 {
        CheckEntry::below("growth fit relative error", (fit.delta_fit - delta).abs() / delta, GROWTH_REL_TOL)
    } else {
        CheckEntry::below("growth fit absolute error", (fit.delta_fit - delta).abs(), 1e-3).with_detail("δ ≤ 1e−3, absolute comparison")
    };
    let full_vs_reduced = if at_half(cfg) {
        CheckEntry::skipped("full symmetric vs reduced", SYMMETRY_TOL)
    } else {
        let m = cfg.branches;
        let full = integrate_full(cfg, &PerturbationWeights::symmetric(m, x0, y0), (0.0, 10.0), 200)?;
        let mut dev: f64 = 0.0;
        for (f, r) in full.samples.iter().zip(&red.samples) {
            let scale = r.state[0].norm().max(r.state[1].norm()).max(1.0);
            for k in 0..m {
                dev = dev.max((f.state[k] - r.state[0]).norm() / scale).max((f.state[m + k] - r.state[1]).norm() / scale);
            }
        }
        CheckEntry::below("full symmetric vs reduced", dev, SYMMETRY_TOL)
    };
    Ok(SimulationReport { delta, delta_fit: Some(fit.delta_fit), r_squared: Some(fit.r_squared), growth, full_vs_reduced })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SpiralConfig,
    pub at_half: bool,
    pub verify: VerifyReport,
    pub operator: OperatorReport,
    pub stability: Option<StabilityResult>,
    pub simulation: Option<SimulationReport>,
    pub errors: Vec<String>,
    pub all_pass: bool,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialise")
    }

    /// Every named check with its status, in report order.
    pub fn checks(&self) -> Vec<&CheckEntry> {
        let mut out: Vec<&CheckEntry> = self.verify.entries.iter().collect();
        for r in &self.operator.rows {
            out.extend([&r.k, &r.j, &r.j_via_pv]);
        }
        out.extend([&self.operator.eigen_residual, &self.operator.negative_control]);
        if let Some(s) = &self.simulation {
            out.extend([&s.growth, &s.full_vs_reduced]);
        }
        out
    }
}

/// Runs every check for one configuration. Failures are collected, never raised.
pub fn run_suite(cfg: &SpiralConfig, spec: &QuadratureSpec) -> SuiteReport {
    let verify = verify_report(cfg, spec);
    let operator = operator_report(cfg, spec);
    let mut errors = vec![];
    let stability = stability_analysis(cfg).map_err(|e| errors.push(format!("stability: {e}"))).ok();
    let simulation = simulation_report(cfg).map_err(|e| errors.push(format!("simulation: {e}"))).ok();
    let sim_ok = simulation.as_ref().is_some_and(|s| !s.growth.failed() && !s.full_vs_reduced.failed());
    let all_pass = verify.all_pass && operator.all_pass && sim_ok && errors.is_empty();
    SuiteReport { config: *cfg, at_half: at_half(cfg), verify, operator, stability, simulation, errors, all_pass }
}

/// Provenance written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Option<SpiralConfig>,
    pub spec: Option<QuadratureSpec>,
    pub seed: u64,
    pub version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: impl Into<String>, config: Option<SpiralConfig>, spec: Option<QuadratureSpec>, seed: u64) -> Self {
        Self {
            command: command.into(),
            config,
            spec,
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: utc_timestamp(),
        }
    }

    /// `<output>.manifest.json`
    pub fn sidecar_path(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".manifest.json");
        output.with_file_name(name)
    }

    /// Writes `content` to `output` and the manifest beside it.
    pub fn write_with(&self, output: &Path, content: &str) -> std::io::Result<PathBuf> {
        std::fs::write(output, content)?;
        let side = Self::sidecar_path(output);
        std::fs::write(&side, serde_json::to_string_pretty(self).expect("manifests serialise"))?;
        Ok(side)
    }
}

/// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
fn utc_timestamp() -> String {
    let secs = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs()) as i64;
    let (days, rem) = (secs.div_euclid(86_400), secs.rem_euclid(86_400));
    // civil-from-days
    let z = days + 719_468;
    let era = z.div_euclid(146_097);
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = doy - (153 * mp + 2) / 5 + 1;
    let mo = if mp < 10 { mp + 3 } else { mp - 9 };
    let y = yoe + era * 400 + i64::from(mo <= 2);
    format!("{y:04}-{mo:02}-{d:02}T{:02}:{:02}:{:02}Z", rem / 3600, rem % 3600 / 60, rem % 60)
}
