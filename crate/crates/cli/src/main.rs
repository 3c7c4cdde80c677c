//! `volterra`: batch front end for checking, simulating, solving and
//! verifying scenario configs.
//!
//! Exit status: 0 on success, 2 when a hypothesis check fails or a solve does
//! not converge or verify, 1 on input errors.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "volterra",
    version,
    about = "Periodic and asymptotically periodic solutions of Volterra difference systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the hypotheses of one regime and report every item.
    Check(CheckArgs),
    /// Iterate the initial-value problem from the configured history.
    Simulate(SimulateArgs),
    /// Find a periodic solution as a fixed point of the period operator.
    SolvePeriodic(PeriodicArgs),
    /// Find an asymptotically periodic solution `u + v` on a finite horizon.
    SolveAsymptotic(AsymptoticArgs),
    /// Solve, then certify the result with independent brute-force sums and
    /// seeded random probes of the operator bounds.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Periodic,
    Asymptotic,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Write the JSON report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct Tolerances {
    /// Fixed-point tolerance on `‖z - E(z)‖`.
    #[arg(long)]
    tol: Option<f64>,
    /// Certified tail bound for every truncated inner sum.
    #[arg(long = "tail-tol")]
    tail_tol: Option<f64>,
}

#[derive(Debug, Args)]
struct Constants {
    #[arg(long, allow_negative_numbers = true)]
    c1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c2: Option<f64>,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Regime to check; by default chosen from the period product of `1 + h`.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    constants: Constants,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    steps: usize,
    #[arg(long = "tail-tol")]
    tail_tol: Option<f64>,
    /// Trajectory table, one row per step.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PeriodicArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tolerances: Tolerances,
    /// Rows written to the table: `n = 0..=steps` (default: one period).
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AsymptoticArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    tolerances: Tolerances,
    #[command(flatten)]
    constants: Constants,
    /// Last index of the solution window (at least 4T).
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    tolerances: Tolerances,
    #[command(flatten)]
    constants: Constants,
    #[arg(long)]
    horizon: Option<usize>,
    /// Periodic mode: residual checks at `n = 0..steps` (default 21).
    #[arg(long)]
    steps: Option<usize>,
    /// Seed for the random operator probes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
