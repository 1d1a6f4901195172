//! Command-line laboratory for the viscoelastic rod with relaxed heat
//! conduction: time-domain simulation, spectrum, resolvent sweeps, the
//! closed-form stationary solution, and a verification battery.
//!
//! Exit codes: 0 success, 1 invalid configuration or I/O problem,
//! 2 numerical failure, 3 verification failure.

// `!(x > 0)`-style checks treat NaN as invalid input on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;
mod verify;

use config::RunConfig;

#[derive(Debug)]
pub enum CmdError {
    /// Bad configuration, unusable inputs, or I/O trouble (exit 1).
    Config(String),
    /// Solver or eigensolver failure (exit 2).
    Numerical(String),
}

impl std::fmt::Display for CmdError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CmdError::Config(m) => write!(f, "configuration error: {m}"),
            CmdError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl CmdError {
    fn exit_code(&self) -> u8 {
        match self {
            CmdError::Config(_) => 1,
            CmdError::Numerical(_) => 2,
        }
    }
}

#[derive(Parser)]
#[command(name = "viscotherm", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the outputs directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the cell count.
    #[arg(long)]
    n: Option<usize>,
    /// Override the time step.
    #[arg(long)]
    dt: Option<f64>,
    /// Override the final time.
    #[arg(long)]
    tfinal: Option<f64>,
    /// Override the preset seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig, CmdError> {
        let mut config = RunConfig::load(&self.config)?;
        config.apply_overrides(self.n, self.dt, self.tfinal, self.seed, self.out.clone());
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the system and write trajectory.csv, constants.json,
    /// summary.json.
    Simulate(CommonArgs),
    /// Dense eigensolve: spectrum.csv and spectrum.json.
    Spectrum(CommonArgs),
    /// Resolvent-norm sweep along the imaginary axis: sweep.csv, sweep.json.
    Sweep(SweepArgs),
    /// Run the verification battery and write verify_report.json.
    Verify(CommonArgs),
    /// Print the closed-form stationary solution at uniform points.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Half-width of the frequency interval.
    #[arg(long, default_value_t = 100.0)]
    lambda_max: f64,
    /// Number of sweep points (>= 3).
    #[arg(long, default_value_t = 201)]
    points: usize,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Velocity-equation forcing, comma-separated polynomial coefficients.
    #[arg(long, default_value = "0")]
    f1: String,
    /// Heat-equation forcing polynomial.
    #[arg(long, default_value = "1")]
    f3: String,
    /// Flux-equation forcing polynomial.
    #[arg(long, default_value = "0")]
    f4: String,
    /// Number of evaluation points.
    #[arg(long, default_value_t = 11)]
    points: usize,
}

fn run(cli: Cli) -> Result<ExitCode, CmdError> {
    match cli.command {
        Command::Simulate(args) => {
            commands::simulate(&args.load()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Spectrum(args) => {
            commands::spectrum(&args.load()?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => {
            commands::sweep(&args.common.load()?, args.lambda_max, args.points)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify(args) => {
            let (_, all_pass) = verify::verify(&args.load()?)?;
            if all_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("verification failed");
                Ok(ExitCode::from(3))
            }
        }
        Command::Oracle(args) => {
            commands::oracle(
                &args.common.load()?,
                &args.f1,
                &args.f3,
                &args.f4,
                args.points,
            )?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
