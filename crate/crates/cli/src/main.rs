//! Command-line front end for the channel-capacity toolkit.
//!
//! Reads a channel description from a JSON file, runs the requested
//! analysis, and writes a self-contained JSON report whose numeric
//! artifacts can be re-evaluated independently.

mod commands;
mod report;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// A classified failure: an exit code plus a human-readable message.
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    /// Unreadable input: malformed JSON, unknown fields, missing files.
    pub fn parse(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }

    /// Input parsed but violates a mathematical invariant.
    pub fn invariant(err: qcap_core::Error) -> Self {
        Failure { code: 3, message: err.to_string() }
    }

    /// Same class as [`Failure::invariant`], with a bespoke message.
    pub fn invariant_msg(message: impl Into<String>) -> Self {
        Failure { code: 3, message: message.into() }
    }

    /// The constraint admits no density matrix at the requested level.
    pub fn infeasible(err: qcap_core::Error) -> Self {
        Failure { code: 5, message: err.to_string() }
    }
}

#[derive(Parser)]
#[command(
    name = "qcap",
    about = "Capacity analysis for finite-dimensional quantum channels",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Path to the channel description (JSON)
    spec: PathBuf,
    /// Seed for all randomized restarts; identical seeds give identical reports
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of optimizer restarts (default: library default)
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective tolerance for the optimizers
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    /// Directory for the per-case reports (created if missing)
    #[arg(long)]
    out: PathBuf,
    /// Run only the named case (or every case sharing that prefix)
    #[arg(long)]
    only: Option<String>,
    /// Seed for all randomized restarts
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of optimizer restarts (default: 8)
    #[arg(long)]
    restarts: Option<usize>,
    /// Objective tolerance for the optimizers
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Capacities, bound ledger, and noise parameter for one channel
    Analyze(RunArgs),
    /// Decide whether assistance helps: EQUAL, GAP, or INCONCLUSIVE
    Certify(RunArgs),
    /// Capacities under an expectation-value constraint on the input
    Constrained(RunArgs),
    /// Reproduce the bundled benchmark results and grade each one
    PaperSuite(SuiteArgs),
}

fn configure_threads() {
    if let Ok(raw) = std::env::var("QCAP_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                // A failure here means a pool already exists; that is fine.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(args) => commands::cmd_analyze(args),
        Command::Certify(args) => commands::cmd_certify(args),
        Command::Constrained(args) => commands::cmd_constrained(args),
        Command::PaperSuite(args) => commands::cmd_paper_suite(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}
