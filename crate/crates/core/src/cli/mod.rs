//! Command-line front end.

pub mod config;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{check_bounds_with, check_monotone, fit_decay, symmetry_defect, tail_decay_check};
use crate::corpus::run_oracle_suite;
use crate::energy::el_residual;
use crate::error::{Error, Result};
use crate::greenfn::{decay_prediction, dump_green, fold_with, reconstruct, LinearizedOperator};
use crate::halflap::HalfLaplacianOperator;
use crate::io::{read_profile, write_atomic, write_profile};
use crate::model::{make_initial_profile, recenter, Grid, WallProfile};
use crate::path::{path_csv, uniqueness_certificate, CertificateOptions, Verdict, RECENTRED_TOL};
use crate::solver::{minimize_with, sweep, sweep_csv, Method};

pub use config::{parse_config, read_config, InitChoice, Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;
pub const EXIT_CONTRADICTION: i32 = 4;

pub const EL_RESIDUAL_TOL: f64 = 1e-5;
pub const SYMMETRY_TOL: f64 = 1e-4;
pub const DECAY_SIDE_TOL: f64 = 0.05;
pub const RECONSTRUCTION_TOL: f64 = 5e-2;
pub const PREDICTION_TOL: f64 = 0.2;

#[derive(Debug, Parser)]
#[command(name = "neelwall", version, about = "Neel wall profiles: solve, verify, certify")]
struct Cli {
    /// Flat `key = value` file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Default)]
struct Common {
    #[arg(long)]
    nu: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    /// Number of grid nodes (odd).
    #[arg(long)]
    n: Option<usize>,
    /// Grid half width L.
    #[arg(long)]
    half_width: Option<f64>,
    #[arg(long)]
    grad_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// gradient_flow or quasi_newton.
    #[arg(long)]
    method: Option<Method>,
    /// template, kink or perturbed.
    #[arg(long)]
    init: Option<InitChoice>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Width of the kink and perturbed starts.
    #[arg(long)]
    kink_width: Option<f64>,
    /// Also write the half-Laplacian multipliers.
    #[arg(long)]
    dump_multipliers: bool,
    /// Also write the fundamental solution of the linearized operator.
    #[arg(long)]
    dump_green: bool,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            nu: self.nu,
            h: self.h,
            n: self.n,
            half_width: self.half_width,
            grad_tol: self.grad_tol,
            max_iter: self.max_iter,
            method: self.method,
            init: self.init,
            seed: self.seed,
            out_dir: self.out_dir.clone(),
            kink_width: self.kink_width,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the wall energy and write the profile.
    Solve(#[command(flatten)] Common),
    /// Run every structural check on a stored profile.
    Verify {
        profile: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Scan the arcsin path between two profiles and certify uniqueness.
    Path {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = crate::path::DEFAULT_T_POINTS)]
        t_points: usize,
        #[arg(long, default_value_t = 1e-5)]
        coincide_tol: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Solve on a (nu, h) table.
    Sweep {
        #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 4.0])]
        nus: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.25, 0.5, 0.75])]
        hs: Vec<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Compare the spectral operator against quadrature oracles.
    Oracle {
        /// Check every k-th node.
        #[arg(long, default_value_t = 1)]
        stride: usize,
        #[arg(long, default_value_t = 8193)]
        poisson_n: usize,
        #[arg(long, default_value_t = 80.0)]
        poisson_half_width: f64,
        #[command(flatten)]
        common: Common,
    },
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .try_init();
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::StepUnderflow { .. } | Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
        Error::InvalidParams(_)
        | Error::InvalidGrid(_)
        | Error::InvalidArgument(_)
        | Error::Incompatible(_)
        | Error::Io { .. }
        | Error::Parse { .. } => EXIT_USAGE,
        _ => EXIT_VERIFY_FAILED,
    }
}

fn resolve(common: &Common, file: Option<&Path>) -> Result<RunConfig> {
    let base = match file {
        Some(p) => read_config(p)?,
        None => Overrides::default(),
    };
    let mut cfg = RunConfig::resolve(common.overrides().over(base))?;
    cfg.dump_multipliers = common.dump_multipliers;
    cfg.dump_green = common.dump_green;
    Ok(cfg)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    ensure_dir(dir)?;
    write_atomic(&dir.join(name), contents.as_bytes())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain record serializes");
    s.push('\n');
    s
}

fn dumps(cfg: &RunConfig, op: &HalfLaplacianOperator) -> Result<()> {
    if cfg.dump_multipliers {
        output(&cfg.out_dir, "multipliers.txt", &op.dump_multipliers())?;
    }
    if cfg.dump_green {
        output(&cfg.out_dir, "green.txt", &dump_green(&cfg.params, &cfg.grid)?)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<i32> {
    let file = cli.config.as_deref();
    match cli.command {
        Command::Solve(common) => {
            let cfg = resolve(&common, file)?;
            cmd_solve(&cfg)
        }
        Command::Verify { profile, common } => {
            let cfg = resolve(&common, file)?;
            cmd_verify(&cfg, &profile)
        }
        Command::Path {
            first,
            second,
            t_points,
            coincide_tol,
            common,
        } => {
            let cfg = resolve(&common, file)?;
            if t_points < 5 {
                return Err(Error::InvalidArgument("t_points must be >= 5".into()));
            }
            if !(coincide_tol > 0.0) {
                return Err(Error::InvalidArgument("coincide_tol must be positive".into()));
            }
            let opts = CertificateOptions {
                grad_tol: cfg.solve.grad_tol,
                coincide_tol,
                t_points,
            };
            cmd_path(&cfg, &first, &second, &opts)
        }
        Command::Sweep { nus, hs, common } => {
            let cfg = resolve(&common, file)?;
            cmd_sweep(&cfg, &nus, &hs)
        }
        Command::Oracle {
            stride,
            poisson_n,
            poisson_half_width,
            common,
        } => {
            let cfg = resolve(&common, file)?;
            let poisson = Grid::new(poisson_n, poisson_half_width)?;
            cmd_oracle(&cfg, stride, &poisson)
        }
    }
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<i32> {
    let op = HalfLaplacianOperator::new(&cfg.grid);
    dumps(cfg, &op)?;
    let p0 = make_initial_profile(&cfg.grid, &cfg.params, cfg.init_kind())?;
    let (p, report) = minimize_with(&p0, &cfg.solve, &op)?;
    ensure_dir(&cfg.out_dir)?;
    write_profile(&cfg.out_dir.join("profile.txt"), &p)?;
    output(&cfg.out_dir, "energy.json", &json(&report.final_energy))?;
    output(&cfg.out_dir, "solve_report.json", &json(&report))?;
    if report.converged {
        log::info!("converged in {} iterations", report.iterations);
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "not converged after {} iterations, gradient norm {:e}",
            report.iterations, report.final_grad_norm
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub skipped: bool,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: serde_json::Value,
}

impl CheckResult {
    fn new(name: &'static str, passed: bool, value: f64, limit: f64, detail: serde_json::Value) -> Self {
        Self {
            name,
            passed,
            skipped: false,
            value: Some(value),
            limit: Some(limit),
            detail,
        }
    }

    fn skipped(name: &'static str, why: &str) -> Self {
        Self {
            name,
            passed: true,
            skipped: true,
            value: None,
            limit: None,
            detail: serde_json::Value::String(why.into()),
        }
    }

    fn failed(name: &'static str, e: &Error) -> Self {
        Self {
            name,
            passed: false,
            skipped: false,
            value: None,
            limit: None,
            detail: serde_json::Value::String(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub profile: String,
    pub nu: f64,
    pub h: f64,
    pub n: usize,
    pub half_width: f64,
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

fn check<F>(name: &'static str, f: F) -> CheckResult
where
    F: FnOnce() -> Result<CheckResult>,
{
    f().unwrap_or_else(|e| CheckResult::failed(name, &e))
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("plain record serializes")
}

/// Runs every check on `p`; errors inside a check mark it failed.
pub fn verify_profile(p: &WallProfile, label: &str) -> VerifyReport {
    let op = HalfLaplacianOperator::new(p.grid());
    let mut checks = Vec::new();
    let n = p.grid().len();

    checks.push(check("el_residual", || {
        let r = el_residual(p, &op)?;
        let sup = r[1..n - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(CheckResult::new(
            "el_residual",
            sup <= EL_RESIDUAL_TOL,
            sup,
            EL_RESIDUAL_TOL,
            serde_json::Value::Null,
        ))
    }));

    checks.push(check("range", || {
        let (lo, hi) = (p.params().right_limit(), p.params().left_limit());
        // Exponential tails reach the limits to within rounding.
        let slack = 4.0 * f64::EPSILON * hi;
        let interior = &p.theta()[1..n - 1];
        let bad = interior.iter().filter(|t| !(**t > lo - slack && **t < hi + slack)).count();
        let at_limit = interior.iter().filter(|t| !(**t > lo && **t < hi)).count() - bad;
        Ok(CheckResult::new(
            "range",
            bad == 0,
            bad as f64,
            0.0,
            serde_json::json!({ "lower": lo, "upper": hi, "at_limit_within_rounding": at_limit }),
        ))
    }));

    let m = check_monotone(p);
    checks.push(CheckResult::new(
        "monotone",
        m.monotone,
        m.max_violation,
        crate::analysis::MONOTONE_TOL,
        serde_json::Value::Null,
    ));

    let s = symmetry_defect(p);
    checks.push(CheckResult::new("symmetry", s <= SYMMETRY_TOL, s, SYMMETRY_TOL, serde_json::Value::Null));

    let nonlocal = p.params().nu() > 0.0;
    let fit = if nonlocal { fit_decay(p) } else { Err(Error::InvalidParams("nu = 0".into())) };
    if nonlocal {
        checks.push(match &fit {
            Ok(f) => {
                let gap = (f.c_plus - f.c_minus).abs() / f.c_plus.abs();
                CheckResult::new("decay_fit", gap <= DECAY_SIDE_TOL, gap, DECAY_SIDE_TOL, to_value(f))
            }
            Err(e) => CheckResult::failed("decay_fit", e),
        });
    } else {
        checks.push(CheckResult::skipped("decay_fit", "the local model decays exponentially"));
    }

    checks.push(check("bounds", || {
        let b = check_bounds_with(p, &op, 0)?;
        Ok(CheckResult::new(
            "bounds",
            b.satisfied(),
            b.sup_theta_x / b.bound_theta_x,
            1.0,
            to_value(&b),
        ))
    }));

    checks.push(check("tail_decay", || {
        let t = tail_decay_check(p)?;
        let worst = (0..3)
            .map(|k| if t.global_sup[k] > 0.0 { t.tail_sup[k] / t.global_sup[k] } else { 0.0 })
            .fold(0.0, f64::max);
        Ok(CheckResult::new(
            "tail_decay",
            t.passed,
            worst,
            1.0 / crate::analysis::TAIL_DROP,
            to_value(&t),
        ))
    }));

    if nonlocal {
        checks.push(check("green_reconstruction", || {
            let lin = LinearizedOperator::new(p.params(), p.grid())?;
            let folded = fold_with(p, &lin)?;
            let rec = reconstruct(&folded, &lin);
            let pred = decay_prediction(p, &folded, &lin);
            let gap = match &fit {
                Ok(f) => (pred.c_plus - f.c_plus).abs() / f.c_plus.abs(),
                Err(_) => f64::INFINITY,
            };
            Ok(CheckResult::new(
                "green_reconstruction",
                rec.relative_residual <= RECONSTRUCTION_TOL && gap <= PREDICTION_TOL,
                rec.relative_residual,
                RECONSTRUCTION_TOL,
                serde_json::json!({
                    "a": folded.a,
                    "reconstruction": rec,
                    "prediction": pred,
                    "prediction_gap": gap,
                    "prediction_limit": PREDICTION_TOL,
                }),
            ))
        }));
    } else {
        checks.push(CheckResult::skipped(
            "green_reconstruction",
            "the linearized operator needs nu > 0",
        ));
    }

    VerifyReport {
        profile: label.to_string(),
        nu: p.params().nu(),
        h: p.params().h(),
        n,
        half_width: p.grid().half_width(),
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

pub fn cmd_verify(cfg: &RunConfig, path: &Path) -> Result<i32> {
    let mut p = read_profile(path)?;
    if (p.center_value() - std::f64::consts::FRAC_PI_2).abs() > RECENTRED_TOL {
        log::info!("recentring {}", path.display());
        p = recenter(&p)?;
    }
    let file_cfg = RunConfig {
        params: *p.params(),
        grid: p.grid().clone(),
        ..cfg.clone()
    };
    dumps(&file_cfg, &HalfLaplacianOperator::new(p.grid()))?;
    let report = verify_profile(&p, &path.display().to_string());
    output(&cfg.out_dir, "verify.json", &json(&report))?;
    for c in report.checks.iter().filter(|c| !c.passed) {
        eprintln!("check {} failed", c.name);
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}

pub fn cmd_path(cfg: &RunConfig, first: &Path, second: &Path, opts: &CertificateOptions) -> Result<i32> {
    let a = recenter(&read_profile(first)?)?;
    let b = recenter(&read_profile(second)?)?;
    if !a.same_discretization(&b) {
        return Err(Error::Incompatible(format!(
            "{} and {} differ in grid or parameters",
            first.display(),
            second.display()
        )));
    }
    let cert = uniqueness_certificate(&a, &b, opts)?;
    output(&cfg.out_dir, "path_scan.csv", &path_csv(&cert.scan))?;
    output(&cfg.out_dir, "certificate.json", &json(&cert))?;
    println!("{}", serde_json::to_string(&cert.verdict).expect("enum serializes"));
    Ok(match cert.verdict {
        Verdict::Coincide | Verdict::NotBothSolutions => EXIT_OK,
        Verdict::Contradiction => EXIT_CONTRADICTION,
        Verdict::NonConvex => EXIT_VERIFY_FAILED,
    })
}

pub fn cmd_sweep(cfg: &RunConfig, nus: &[f64], hs: &[f64]) -> Result<i32> {
    let pairs: Vec<(f64, f64)> = nus
        .iter()
        .flat_map(|&nu| hs.iter().map(move |&h| (nu, h)))
        .collect();
    let rows = sweep(&pairs, &cfg.grid, &cfg.solve);
    output(&cfg.out_dir, "sweep.csv", &sweep_csv(&rows))?;
    let all = rows
        .iter()
        .all(|r| matches!(&r.outcome, Ok(s) if s.converged));
    Ok(if all { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_oracle(cfg: &RunConfig, stride: usize, poisson: &Grid) -> Result<i32> {
    let report = run_oracle_suite(&cfg.grid, poisson, stride)?;
    for l in &report.lines {
        println!(
            "{:<16} operator {:.3e}  seminorm {:.3e}",
            l.name, l.operator_discrepancy, l.seminorm_discrepancy
        );
    }
    println!("poisson kernel   max error {:.3e}", report.poisson_error);
    output(&cfg.out_dir, "oracle.json", &json(&report))?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VERIFY_FAILED })
}
