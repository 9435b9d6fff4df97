//! `rjd`: certify and check exponential convergence rates of reflected
//! jump-diffusions described by JSON model files.
//!
//! Exit status: 0 on success or a passing check, 2 on a failing check or an
//! infeasible rate request, 1 on usage and model-file errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rjd_core::rng::DEFAULT_SEED;
use rjd_core::verify::{DEFAULT_DISTRIBUTION_PATHS, DEFAULT_DT, DEFAULT_RATE_PATHS};

#[derive(Parser, Debug)]
#[command(
    name = "rjd",
    version,
    about = "Rate certificates and Monte Carlo checks for reflected jump-diffusions"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Model or pair-model JSON file
    #[arg(long, global = true, value_name = "PATH")]
    model: Option<PathBuf>,
    /// Directory for the JSON and CSV artifacts
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Root seed of every random stream
    #[arg(long, global = true, env = "RJD_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for path simulation (default: logical cores)
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
#[command(rename_all = "kebab-case")]
pub enum Command {
    /// Check the standing assumptions on a grid
    Validate(ValidateArgs),
    /// Optimal (or fixed-λ) rate certificate
    Rate(RateArgs),
    /// One reflected path, or one path of a particle pair
    Simulate(SimulateArgs),
    /// Regress the decay of the V-gap against the certified rate
    VerifyExact(ExactArgs),
    /// Check the V-gap against the certified coupling bound
    VerifyBound(BoundArgs),
    /// Long-run distribution, optionally with a moment convergence check
    Stationary(StationaryArgs),
    /// Rate certificate of the gap of a particle pair
    GapRate(RateArgs),
    /// Compare the simulated pair gap with the reduced gap model
    GapEquiv(GapEquivArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Validate(_) => "validate",
            Command::Rate(_) => "rate",
            Command::Simulate(_) => "simulate",
            Command::VerifyExact(_) => "verify-exact",
            Command::VerifyBound(_) => "verify-bound",
            Command::Stationary(_) => "stationary",
            Command::GapRate(_) => "gap-rate",
            Command::GapEquiv(_) => "gap-equiv",
        }
    }
}

#[derive(Args, Debug, Serialize)]
pub struct ValidateArgs {
    /// Grid spacing of the checks (default: the model's)
    #[arg(long, value_parser = positive)]
    pub grid_step: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct RateArgs {
    /// Certify at this λ instead of optimizing
    #[arg(long, value_parser = positive)]
    pub lambda: Option<f64>,
}

#[derive(Args, Debug, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub x0: f64,
    /// Second particle of a pair file
    #[arg(long, default_value_t = 1.0, value_parser = nonnegative)]
    pub x2: f64,
    #[arg(long, default_value_t = 10.0, value_parser = positive)]
    pub t_max: f64,
    #[arg(long, default_value_t = DEFAULT_DT, value_parser = positive)]
    pub dt: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct ExactArgs {
    /// λ of the Lyapunov function (default: the optimal λ)
    #[arg(long, value_parser = positive)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub x1: f64,
    #[arg(long, default_value_t = 2.0, value_parser = nonnegative)]
    pub x2: f64,
    #[arg(long, default_value = "0.5,1,1.5,2,2.5,3", value_parser = times)]
    pub times: Times,
    #[arg(long, default_value_t = DEFAULT_RATE_PATHS, value_parser = count)]
    pub paths: usize,
    #[arg(long, default_value_t = DEFAULT_DT, value_parser = positive)]
    pub dt: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct BoundArgs {
    /// Check the bound of the certificate at this λ
    #[arg(long, value_parser = positive)]
    pub lambda: Option<f64>,
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub x1: f64,
    #[arg(long, default_value_t = 2.0, value_parser = nonnegative)]
    pub x2: f64,
    #[arg(long, default_value = "1,2,3", value_parser = times)]
    pub times: Times,
    #[arg(long, default_value_t = DEFAULT_RATE_PATHS, value_parser = count)]
    pub paths: usize,
    #[arg(long, default_value_t = DEFAULT_DT, value_parser = positive)]
    pub dt: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct StationaryArgs {
    #[arg(long, default_value_t = 0.0, value_parser = nonnegative)]
    pub x0: f64,
    /// Start of sampling (default: 20/κ)
    #[arg(long, value_parser = positive)]
    pub t_burn: Option<f64>,
    /// End of sampling (default: twice the burn-in)
    #[arg(long, value_parser = positive)]
    pub t_max: Option<f64>,
    /// Sampling stride along each path; 0 keeps only the final state
    #[arg(long, default_value_t = 0.5, value_parser = nonnegative)]
    pub stride: f64,
    #[arg(long, default_value_t = DEFAULT_DISTRIBUTION_PATHS, value_parser = count)]
    pub paths: usize,
    #[arg(long, default_value_t = DEFAULT_DT, value_parser = positive)]
    pub dt: f64,
    /// Also check that E Z(t)^α converges at the certified rate
    #[arg(long, value_parser = nonnegative)]
    pub alpha: Option<f64>,
    /// Times of the moment check
    #[arg(long, default_value = "1,2,3,4,5", value_parser = times)]
    pub times: Times,
    #[arg(long, default_value_t = 64, value_parser = count)]
    pub bins: usize,
}

#[derive(Args, Debug, Serialize)]
pub struct GapEquivArgs {
    /// Initial gap
    #[arg(long, default_value_t = 1.0, value_parser = nonnegative)]
    pub x0: f64,
    /// Comparison time
    #[arg(long, default_value_t = 2.0, value_parser = nonnegative)]
    pub t_max: f64,
    #[arg(long, default_value_t = DEFAULT_DISTRIBUTION_PATHS, value_parser = count)]
    pub paths: usize,
    #[arg(long, default_value_t = DEFAULT_DT, value_parser = positive)]
    pub dt: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct Times(pub Vec<f64>);

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn nonnegative(s: &str) -> Result<f64, String> {
    let v = number(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must be nonnegative, got {v}"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn times(s: &str) -> Result<Times, String> {
    let v = s.split(',').map(nonnegative).collect::<Result<Vec<f64>, _>>()?;
    if v.is_empty() || v.windows(2).any(|w| w[1] <= w[0]) {
        return Err("times must be a strictly increasing comma-separated list".into());
    }
    Ok(Times(v))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.into()).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    let Some(model) = cli.common.model.as_deref() else {
        eprintln!("error: --model PATH is required");
        return ExitCode::from(1);
    };
    match commands::run(&cli.command, model, cli.common.seed, &cli.common.out) {
        Ok(pass) => ExitCode::from(if pass { 0 } else { 2 }),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
