//! Command-line harness around the resilient-optimization library.
//!
//! Exit codes: 0 on success (for `run`, all applicable guarantee checks
//! held), 1 when a guarantee check or redundancy check failed, 2 on
//! malformed configuration or input.

mod batch;
mod cgc_cmd;
mod config;
mod redundancy_cmd;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use byzopt::Tolerances;
use clap::{Args, Parser, Subcommand};

use batch::{run_batch, write_results_csv, write_summary_json, BatchOptions};
use config::{expand_scenarios, load_config};

#[derive(Parser)]
#[command(
    name = "byzopt",
    version,
    about = "Fault-tolerant collaborative optimization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of scenario-solver experiments from a config file.
    Run(RunArgs),
    /// Check how redundant a list of cost functions is.
    CheckRedundancy(redundancy_cmd::CheckArgs),
    /// Run one clipped-gradient descent on a scenario.
    Cgc(cgc_cmd::CgcArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for results.csv and summary.json.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the config's base tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for the batch.
    #[arg(long)]
    jobs: Option<usize>,
    /// Record wall time per cell. Off by default, keeping reruns
    /// byte-identical.
    #[arg(long)]
    timing: bool,
}

fn cmd_run(args: &RunArgs) -> Result<i32> {
    let config = load_config(&args.config)?;
    let base = args.tol.unwrap_or(config.tolerance);
    anyhow::ensure!(
        base > 0.0 && base.is_finite(),
        "tolerance must be positive and finite"
    );
    let tol = Tolerances::with_base(base);
    let scenarios = expand_scenarios(&config, &tol)?;
    let options = BatchOptions {
        timing: config.timing || args.timing,
        jobs: args.jobs,
    };
    let outcome = run_batch(&scenarios, &config.solvers, &tol, &options)?;

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_results_csv(&outcome.rows, &args.out.join("results.csv"))?;
    write_summary_json(&outcome.summary, &args.out.join("summary.json"))?;

    for failure in &outcome.summary.failures {
        eprintln!("FAIL {failure}");
    }
    println!(
        "{} cells, {} checked, {} passed, {} failed",
        outcome.summary.cells,
        outcome.summary.asserted,
        outcome.summary.passed,
        outcome.summary.failed
    );
    Ok(if outcome.summary.failed == 0 { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::CheckRedundancy(args) => redundancy_cmd::cmd_check(args),
        Command::Cgc(args) => cgc_cmd::cmd_cgc(args),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
