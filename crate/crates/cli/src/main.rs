mod commands;
mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use bellopt::fock::DEFAULT_TRUNCATION;
use bellopt::optimizer::OptimizerConfig;
use bellopt::{LocalOscillatorSetting, WernerParameter};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::CliError;

#[derive(Parser, Debug)]
#[command(name = "bellopt", version, about = "Bell-type inequality violations for Werner-like states under unbalanced homodyne detection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate an inequality at given settings.
    Evaluate(EvaluateArgs),
    /// Optimise settings on a grid of mixing parameters.
    Sweep(SweepArgs),
    /// Bisect for the smallest mixing parameter with a violation.
    Threshold(ThresholdArgs),
    /// Check classical bounds at every deterministic vertex.
    #[command(name = "verify-lhv")]
    VerifyLhv(VerifyArgs),
    /// Compare closed-form probabilities with the truncated Fock-space oracle.
    #[command(name = "oracle-check")]
    OracleCheck(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output format (default: csv for sweep, json otherwise).
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to FILE instead of standard output.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct OptimizerArgs {
    /// Random start points per facet.
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
    pub starts: u64,
    /// Bound on each real and imaginary setting component.
    #[arg(long, default_value_t = 3.0, value_parser = parse_positive)]
    pub radius: f64,
    /// Nelder-Mead convergence tolerance.
    #[arg(long, default_value_t = 1e-9, value_parser = parse_positive)]
    pub tol_value: f64,
    /// Threshold bracket width.
    #[arg(long, default_value_t = 1e-3, value_parser = parse_positive)]
    pub tol_p: f64,
    /// Iteration cap per local search.
    #[arg(long, default_value_t = 2000, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iters: u64,
    #[command(flatten)]
    pub seed: SeedArg,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            starts: self.starts as usize,
            radius: self.radius,
            tol_value: self.tol_value,
            tol_p: self.tol_p,
            max_iters: self.max_iters as usize,
            seed: self.seed.seed,
        }
    }
}

#[derive(Args, Debug)]
pub struct SeedArg {
    /// RNG seed; BELLOPT_SEED overrides the default, the flag overrides both.
    #[arg(long, env = "BELLOPT_SEED", default_value_t = 42)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// One of ch, w1, j1, j2, j3, j4, j5.
    #[arg(long)]
    pub inequality: String,
    #[arg(long, value_parser = parse_mixing)]
    pub p: f64,
    /// Settings as space-separated `re,im` pairs.
    #[arg(long, num_args = 1.., required = true, value_parser = parse_setting)]
    pub settings: Vec<LocalOscillatorSetting>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub inequality: String,
    /// `start:stop:step`, endpoints included.
    #[arg(long, value_parser = parse_grid)]
    pub grid: GridSpec,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub inequality: String,
    #[command(flatten)]
    pub opt: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["inequality", "all"])))]
pub struct VerifyArgs {
    #[arg(long)]
    pub inequality: Option<String>,
    /// Check every built-in inequality.
    #[arg(long)]
    pub all: bool,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["pair", "random"])))]
pub struct OracleArgs {
    /// Mixing parameter used with --pair.
    #[arg(long, value_parser = parse_mixing, default_value_t = 1.0, conflicts_with = "random")]
    pub p: f64,
    /// Amplitudes `α β` as two `re,im` values; repeatable.
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"], action = clap::ArgAction::Append, value_parser = parse_setting)]
    pub pair: Vec<LocalOscillatorSetting>,
    /// Number of seeded random draws (p uniform, amplitudes in the disk |α| <= 2).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub random: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_TRUNCATION as u64, value_parser = clap::value_parser!(u64).range(1..))]
    pub truncation: u64,
    #[command(flatten)]
    pub seed: SeedArg,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("{v} must be positive"))
    }
}

fn parse_mixing(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    WernerParameter::new(v).map(f64::from).map_err(|e| e.to_string())
}

fn parse_setting(s: &str) -> Result<LocalOscillatorSetting, String> {
    let (re, im) = s
        .split_once(',')
        .ok_or_else(|| format!("setting '{s}' must be written re,im"))?;
    Ok(LocalOscillatorSetting::new(parse_f64(re)?, parse_f64(im)?))
}

fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [start, stop, step] = parts[..] else {
        return Err(format!("grid '{s}' must be start:stop:step"));
    };
    let g = GridSpec {
        start: parse_mixing(start)?,
        stop: parse_mixing(stop)?,
        step: parse_positive(step)?,
    };
    if g.stop < g.start {
        return Err(format!("grid start {} exceeds stop {}", g.start, g.stop));
    }
    Ok(g)
}

/// Prefix tokens such as `-1,0` or `-.5` with a space so clap reads them as
/// values rather than short flags; the value parsers trim it again.
fn shield_negative(arg: OsString) -> OsString {
    match arg.to_str() {
        Some(s) if s.len() > 1 && s.starts_with('-') && s[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.') => {
            format!(" {s}").into()
        }
        _ => arg,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse_from(std::env::args_os().map(shield_negative));
    let result = match &cli.command {
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Threshold(a) => commands::threshold(a),
        Command::VerifyLhv(a) => commands::verify_lhv(a),
        Command::OracleCheck(a) => commands::oracle_check(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
