//! Command-line front end: run experiments, certify unboundedness, sweep
//! config directories. All subcommands print a JSON report to stdout.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use unbounded_opt::harness::{cli_certify, cli_run, cli_sweep, HarnessError};

#[derive(Parser)]
#[command(
    name = "unbopt",
    about = "Dual certificates and rate checks for unbounded smooth convex minimization",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config; write its CSV and summary outputs.
    Run {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Redirect all output files into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Fail (exit 2) if any applicable bound is violated, regardless of
        /// the config's own assert_bounds flag.
        #[arg(long)]
        assert_bounds: bool,
    },
    /// Decide lower-unboundedness of a problem via certificate thresholds.
    Certify {
        /// Problem description (JSON).
        problem: PathBuf,
        /// Iteration budget before giving up with INCONCLUSIVE.
        #[arg(long, default_value_t = 1000)]
        budget: usize,
    },
    /// Run every .json config in a directory and aggregate pass/fail.
    Sweep {
        /// Directory of experiment configs.
        dir: PathBuf,
        /// Redirect all output files into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn print_json<T: serde::Serialize>(value: &T) {
    match serde_json::to_string_pretty(value) {
        Ok(text) => println!("{text}"),
        Err(e) => eprintln!("error: could not serialize report: {e}"),
    }
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            assert_bounds,
        } => match cli_run(&config, out.as_deref(), assert_bounds) {
            Ok(summary) => {
                print_json(&summary);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Certify { problem, budget } => match cli_certify(&problem, budget) {
            Ok(report) => {
                print_json(&report);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Sweep { dir, out } => match cli_sweep(&dir, out.as_deref()) {
            Ok(report) => {
                print_json(&report);
                ExitCode::from(report.exit_code() as u8)
            }
            Err(e) => fail(e),
        },
    }
}
