//! Command-line front end. Reports go to stdout, or to `--json <path>` with a
//! `<path>.manifest.json` sidecar.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use spiral_stab::coefficients::coefficient_set;
use spiral_stab::numerics::{c, C64};
use spiral_stab::ode::{fit_growth, integrate_full, integrate_hat, integrate_reduced, random_state, HatSystem, Trajectory};
use spiral_stab::quadrature::QuadratureSpec;
use spiral_stab::report::{operator_report, run_suite, verify_report, RunManifest};
use spiral_stab::spiral::{constraint_residual, solve_spiral_parameters, PerturbationWeights};
use spiral_stab::stability::{stability_analysis, sweep, sweep_relative, EigenSolution};
use spiral_stab::{SpiralConfig, SpiralError};

#[derive(Parser)]
#[command(name = "spiral-stab", version, about = "Linear instability of M-branch Alexander spirals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the constraint for (μ, g).
    Params(ParamsArgs),
    /// Coefficients c₀, c±, c_mk±.
    Coeffs(ConfigArgs),
    /// Reduced spectrum and growth exponent δ.
    Stability(ConfigArgs),
    /// Grid of stability results over (a, α).
    Sweep(SweepArgs),
    /// Quadrature identity table.
    Verify(VerifyArgs),
    /// Operator actions and linearised residuals.
    OperatorCheck(VerifyArgs),
    /// Integrate the reduced, hat or full system.
    Simulate(SimulateArgs),
    /// Every check in one report.
    Suite(VerifyArgs),
}

#[derive(Args)]
struct ParamsArgs {
    #[arg(long = "M")]
    m: usize,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long = "M", default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 2.0)]
    a: f64,
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    /// Allow --mu/--g off the constraint surface.
    #[arg(long)]
    unchecked: bool,
    #[arg(long, allow_negative_numbers = true, requires = "unchecked")]
    mu: Option<f64>,
    #[arg(long, requires = "unchecked")]
    g: Option<f64>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct SpecArgs {
    #[arg(long, default_value_t = 32)]
    panel_points: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Truncation radius for real-line integrals (default 40/a).
    #[arg(long)]
    radius: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[command(flatten)]
    spec: SpecArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long = "M", default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 0.5)]
    a_min: f64,
    #[arg(long, default_value_t = 10.0)]
    a_max: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.01)]
    alpha_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 50)]
    n_a: usize,
    #[arg(long, default_value_t = 50)]
    n_alpha: usize,
    /// Treat the α bounds as offsets r with α = (1+r)/(2a).
    #[arg(long)]
    relative: bool,
    /// CSV output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Reduced,
    Hat,
    Full,
}

#[derive(Clone, Copy, ValueEnum)]
enum Init {
    /// Dominant eigenvector.
    Eigen,
    /// Seeded uniform random amplitudes.
    Random,
    /// X_m = Y_m = 1 (full) or X = Y = 1.
    Symmetric,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, value_enum, default_value_t = Kind::Reduced)]
    kind: Kind,
    #[arg(long, value_enum, default_value_t = Init::Eigen)]
    init: Init,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 0.0)]
    s0: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 10.0)]
    s1: f64,
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Growth-fit window, defaulting to the second half of the span.
    #[arg(long, allow_negative_numbers = true, num_args = 2)]
    fit: Option<Vec<f64>>,
    /// Trajectory CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Checks,
}

impl From<SpiralError> for Failure {
    fn from(e: SpiralError) -> Self {
        match e {
            SpiralError::InvalidParameter(_) | SpiralError::LengthMismatch { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn build_config(args: &ConfigArgs) -> std::result::Result<SpiralConfig, Failure> {
    if args.unchecked && (args.mu.is_some() || args.g.is_some()) {
        let (mu0, g0) = solve_spiral_parameters(args.a, args.m)?;
        Ok(SpiralConfig::unchecked(args.m, args.a, args.mu.unwrap_or(mu0), args.g.unwrap_or(g0), args.alpha)?)
    } else {
        Ok(SpiralConfig::new(args.m, args.a, args.alpha)?)
    }
}

fn build_spec(args: &SpecArgs) -> std::result::Result<QuadratureSpec, Failure> {
    let spec = QuadratureSpec { panel_points: args.panel_points, tol: args.tol, tail_radius: args.radius, ..QuadratureSpec::default() };
    spec.validate()?;
    Ok(spec)
}

fn emit(text: &str, path: Option<&PathBuf>, manifest: RunManifest) -> Outcome {
    match path {
        Some(p) => {
            manifest.write_with(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display())))?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("outputs serialise")
}

fn cmd_params(args: &ParamsArgs) -> Outcome {
    if args.m < 3 {
        return Err(Failure::Usage(format!("M = {}; at least 3 required", args.m)));
    }
    let (mu, g) = solve_spiral_parameters(args.a, args.m)?;
    let residual = constraint_residual(args.m, args.a, mu, g)?;
    let out = json!({ "M": args.m, "a": args.a, "mu": mu, "g": g, "residual": residual });
    emit(&pretty(&out), args.json.as_ref(), RunManifest::new("params", None, None, 0))
}

fn cmd_coeffs(args: &ConfigArgs) -> Outcome {
    let cfg = build_config(args)?;
    let set = coefficient_set(&cfg)?;
    let out = json!({ "config": cfg, "coefficients": set });
    emit(&pretty(&out), args.json.as_ref(), RunManifest::new("coeffs", Some(cfg), None, 0))
}

fn cmd_stability(args: &ConfigArgs) -> Outcome {
    let cfg = build_config(args)?;
    let out = json!({ "config": cfg, "stability": stability_analysis(&cfg)? });
    emit(&pretty(&out), args.json.as_ref(), RunManifest::new("stability", Some(cfg), None, 0))
}

fn cmd_sweep(args: &SweepArgs) -> Outcome {
    let (ar, al) = ((args.a_min, args.a_max), (args.alpha_min, args.alpha_max));
    let res = if args.relative {
        sweep_relative(args.m, ar, al, args.n_a, args.n_alpha)?
    } else {
        sweep(args.m, ar, al, args.n_a, args.n_alpha)?
    };
    let manifest = || RunManifest::new(if args.relative { "sweep --relative" } else { "sweep" }, None, None, 0);
    if let Some(p) = &args.json {
        emit(&res.to_json(), Some(p), manifest())?;
    }
    if args.out.is_some() || args.json.is_none() {
        emit(res.to_csv().trim_end(), args.out.as_ref(), manifest())?;
    }
    eprintln!("unstable fraction {:.6} over {} cells", res.unstable_fraction, res.cells.len());
    Ok(())
}

fn checked<T: Serialize>(name: &str, args: &VerifyArgs, run: impl Fn(&SpiralConfig, &QuadratureSpec) -> (T, bool)) -> Outcome {
    let cfg = build_config(&args.config)?;
    let spec = build_spec(&args.spec)?;
    let (report, pass) = run(&cfg, &spec);
    emit(&pretty(&report), args.config.json.as_ref(), RunManifest::new(name, Some(cfg), Some(spec), 0))?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Outcome {
    let cfg = build_config(&args.config)?;
    let span = (args.s0, args.s1);
    let m = cfg.branches;
    let traj: Trajectory = match (args.kind, args.init) {
        (Kind::Reduced, init) => {
            let (x, y) = match init {
                Init::Eigen => {
                    let e = EigenSolution::dominant(&cfg)?;
                    (e.x(args.s0), e.y(args.s0))
                }
                Init::Random => {
                    let r = random_state(2, args.seed);
                    (r[0], r[1])
                }
                Init::Symmetric => (c(1.0, 0.0), c(1.0, 0.0)),
            };
            integrate_reduced(&cfg, x, y, span, args.steps)?
        }
        (Kind::Hat, init) => {
            let v = match init {
                Init::Eigen => {
                    let hat = HatSystem::from_config(&cfg)?;
                    let (l1, l2) = hat.eigenvalues();
                    [c(1.0, 0.0), if l1.re >= l2.re { l1 } else { l2 }]
                }
                Init::Random => {
                    let r = random_state(2, args.seed);
                    [r[0], r[1]]
                }
                Init::Symmetric => [c(1.0, 0.0), c(1.0, 0.0)],
            };
            integrate_hat(&cfg, v, span, args.steps)?
        }
        (Kind::Full, init) => {
            let w = match init {
                Init::Eigen => {
                    let e = EigenSolution::dominant(&cfg)?;
                    PerturbationWeights::symmetric(m, e.x(args.s0), e.y(args.s0))
                }
                Init::Random => PerturbationWeights::new(random_state(m, args.seed), random_state(m, args.seed.wrapping_add(1)))?,
                Init::Symmetric => PerturbationWeights::symmetric(m, c(1.0, 0.0), c(1.0, 0.0)),
            };
            integrate_full(&cfg, &w, span, args.steps)?
        }
    };
    let window = match &args.fit {
        Some(v) => (v[0], v[1]),
        None => (0.5 * (args.s0 + args.s1), args.s1),
    };
    let fit = fit_growth(&traj, window).ok();
    let delta = stability_analysis(&cfg)?.delta;
    let manifest = RunManifest::new("simulate", Some(cfg), None, args.seed);
    if let Some(p) = &args.out {
        emit(&traj.to_csv(), Some(p), manifest.clone())?;
    }
    let last: Vec<C64> = traj.last().state.clone();
    let summary = json!({
        "config": cfg,
        "kind": traj.kind,
        "samples": traj.len(),
        "delta": delta,
        "fit_window": [window.0, window.1],
        "fit": fit,
        "final_state": last.iter().map(|z| json!({"re": z.re, "im": z.im})).collect::<Vec<_>>(),
        "compatible_init": traj.compatible_init,
        "max_compat_drift": traj.max_compat_drift,
    });
    emit(&pretty(&summary), args.config.json.as_ref(), manifest)
}

fn configure_threads() {
    if let Some(n) = std::env::var("SPIRAL_STAB_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            // Only fails if a pool already exists, which cannot happen here.
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Params(a) => cmd_params(a),
        Command::Coeffs(a) => cmd_coeffs(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Verify(a) => checked("verify", a, |cfg, spec| {
            let r = verify_report(cfg, spec);
            let pass = r.all_pass;
            (r, pass)
        }),
        Command::OperatorCheck(a) => checked("operator-check", a, |cfg, spec| {
            let r = operator_report(cfg, spec);
            let pass = r.all_pass;
            (r, pass)
        }),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Suite(a) => checked("suite", a, |cfg, spec| {
            let r = run_suite(cfg, spec);
            let pass = r.all_pass;
            (r, pass)
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
    }
}
