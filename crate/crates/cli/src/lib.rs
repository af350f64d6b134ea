//! `mixedreg` command-line front end.
//!
//! Every subcommand writes its CSV/JSON artifacts and a `summary.json` into the
//! output directory. Exit codes: 0 all checks passed, 1 some check failed,
//! 2 bad configuration or arguments, 3 solver failure.

use std::ffi::OsString;
use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use mixedreg_core::kkt::{ACTIVE_TOL_BASE, DEFAULT_DAMPING, DEFAULT_KKT_TOL};
use mixedreg_core::pde::NEWTON_TOL;

mod commands;
mod config;
mod summary;

pub use config::{locate_field, RunConfig};
pub use summary::{Check, Status, Summary, SUMMARY_FILE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mixedreg", version, about = "Solvers and verification experiments for mixed control-state constrained elliptic control")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Problem description (TOML). The built-in default problem when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, env = "MIXEDREG_OUT", default_value = "mixedreg-out")]
    pub out: PathBuf,
    /// Seed of the single random generator used by sampling experiments.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Mesh level `L` or inclusive range `A..B`.
    #[arg(long, visible_alias = "level", global = true, value_parser = parse_levels)]
    pub levels: Option<RangeInclusive<usize>>,
    #[arg(long, global = true, default_value_t = NEWTON_TOL)]
    pub newton_tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_KKT_TOL)]
    pub kkt_tol: f64,
    #[arg(long, global = true, default_value_t = ACTIVE_TOL_BASE)]
    pub active_tol: f64,
    #[arg(long, global = true, default_value_t = DEFAULT_DAMPING)]
    pub damping: f64,
    #[arg(long, global = true, default_value_t = 500)]
    pub max_iter: usize,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Sample the standing assumptions on the problem data.
    Check {
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Solve the state equation for given controls, optionally against an exact solution.
    SolveState(StateArgs),
    /// Compare the adjoint gradient with central finite differences.
    GradientCheck(GradientArgs),
    /// Solve the optimality system.
    SolveKkt,
    /// Constructive surjectivity check of the linearized constraints.
    Robinson(RobinsonArgs),
    /// Fractional Sobolev norm of a boundary function across levels.
    FracNorm(FracNormArgs),
    /// Superposition estimate over random boundary fields.
    ChainRule(ChainRuleArgs),
    /// Product estimate over random boundary fields.
    ProductRule(ProductRuleArgs),
    /// Lipschitz and Hölder estimates of the optimal solution under refinement.
    Regularity {
        /// Pass when some field diverges instead of when all stabilize.
        #[arg(long)]
        expect_divergence: bool,
    },
    /// Integrability exponents r, s for N, p, q.
    Exponents {
        #[arg(long = "N")]
        n: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check { .. } => "check",
            Command::SolveState(_) => "solve-state",
            Command::GradientCheck(_) => "gradient-check",
            Command::SolveKkt => "solve-kkt",
            Command::Robinson(_) => "robinson",
            Command::FracNorm(_) => "frac-norm",
            Command::ChainRule(_) => "chain-rule",
            Command::ProductRule(_) => "product-rule",
            Command::Regularity { .. } => "regularity",
            Command::Exponents { .. } => "exponents",
        }
    }

    fn default_levels(&self) -> RangeInclusive<usize> {
        match self {
            Command::Check { .. } | Command::Exponents { .. } => 0..=0,
            Command::GradientCheck(_) | Command::Robinson(_) => 3..=3,
            Command::SolveState(_) | Command::SolveKkt => 4..=4,
            Command::FracNorm(_) => 3..=5,
            Command::ChainRule(_) | Command::ProductRule(_) => 5..=6,
            Command::Regularity { .. } => 3..=6,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct StateArgs {
    /// Domain control as an expression in x1, x2.
    #[arg(long, default_value = "1")]
    pub u: String,
    /// Boundary control as an expression in x1, x2.
    #[arg(long, default_value = "0")]
    pub v: String,
    /// Exact state; enables error columns and order checks.
    #[arg(long)]
    pub exact: Option<String>,
    #[arg(long, default_value_t = 1.9)]
    pub min_order: f64,
    #[arg(long, default_value_t = 8)]
    pub max_newton: usize,
}

#[derive(Args, Debug, Clone)]
pub struct GradientArgs {
    #[arg(long, default_value = "0.5 + x1 - x2^2")]
    pub u: String,
    #[arg(long, default_value = "-0.3 + x1*x2")]
    pub v: String,
    #[arg(long, default_value_t = 10)]
    pub directions: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct RobinsonArgs {
    #[arg(long, default_value = "x1")]
    pub u: String,
    #[arg(long, default_value = "0.2")]
    pub v: String,
    #[arg(long, default_value_t = 20)]
    pub targets: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct FracNormArgs {
    /// Boundary function as an expression in x1, x2.
    #[arg(long, default_value = "x1")]
    pub field: String,
    #[arg(long, default_value_t = 0.5)]
    pub tau: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    /// Reference seminorm compared with the finest level.
    #[arg(long)]
    pub reference: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub rel_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// Random fields per level.
    #[arg(long, default_value_t = 50)]
    pub fields: usize,
    /// Upper bound of `max |v|` for the random fields.
    #[arg(long, default_value_t = 5.0)]
    pub amplitude: f64,
    /// Allowed relative change of the largest ratio between the last two levels.
    #[arg(long, default_value_t = 0.25)]
    pub stability: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ChainRuleArgs {
    /// Outer function a(x1, x2, t).
    #[arg(long, default_value = "sin(t)")]
    pub a: String,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k: f64,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ProductRuleArgs {
    #[arg(long, default_value_t = 0.25)]
    pub tau: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub tau2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub k2: f64,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

/// `L`, `A..B` or `A..=B`; both range forms include `B`.
pub fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad level `{t}`: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?),
        None => {
            let l = num(s)?;
            (l, l)
        }
    };
    if a > b {
        return Err(format!("empty level range `{s}`"));
    }
    Ok(a..=b)
}

/// Errors classified by exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Solver(String),
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

fn classify(e: &anyhow::Error) -> (Status, i32) {
    use mixedreg_core::Error as E;
    if let Some(f) = e.downcast_ref::<Failure>() {
        return match f {
            Failure::Config(_) => (Status::ConfigError, EXIT_CONFIG),
            Failure::Solver(_) => (Status::SolverFailure, EXIT_SOLVER),
        };
    }
    match e.downcast_ref::<E>() {
        Some(E::Parse { .. } | E::Config(_) | E::Precondition(_)) => (Status::ConfigError, EXIT_CONFIG),
        _ => (Status::SolverFailure, EXIT_SOLVER),
    }
}

/// Parse `args` (program name first), run the subcommand and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    run_cli(&cli)
}

pub fn run_cli(cli: &Cli) -> i32 {
    let cfg = RunConfig::from_args(cli.command.name(), &cli.global, cli.command.default_levels());
    let mut ctx = commands::Context::new(cfg);
    let result = match ctx.cfg.validate() {
        Err(e) => Err(e),
        Ok(()) => match rayon::ThreadPoolBuilder::new().num_threads(ctx.cfg.threads).build() {
            Ok(pool) => pool.install(|| commands::dispatch(&cli.command, &mut ctx)),
            Err(e) => Err(Failure::Config(format!("thread pool: {e}")).into()),
        },
    };
    let (status, code, error) = match result {
        Ok(()) if ctx.summary.checks.iter().all(|c| c.passed) => (Status::Pass, EXIT_OK, None),
        Ok(()) => (Status::Fail, EXIT_CHECK_FAILED, None),
        Err(e) => {
            let (s, c) = classify(&e);
            eprintln!("error: {e:#}");
            (s, c, Some(format!("{e:#}")))
        }
    };
    ctx.summary.status = status;
    ctx.summary.exit_code = code;
    ctx.summary.error = error;
    for c in &ctx.summary.checks {
        println!("[{}] {}", if c.passed { "PASS" } else { "FAIL" }, c.describe());
    }
    if let Err(e) = ctx.finish() {
        eprintln!("error: writing {SUMMARY_FILE}: {e:#}");
        return if code == EXIT_OK { EXIT_SOLVER } else { code };
    }
    code
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_syntax() {
        assert_eq!(parse_levels("4").unwrap(), 4..=4);
        assert_eq!(parse_levels("3..6").unwrap(), 3..=6);
        assert_eq!(parse_levels("3..=6").unwrap(), 3..=6);
        assert!(parse_levels("6..3").is_err());
        assert!(parse_levels("x").is_err());
    }
}
