//! The `check-redundancy` subcommand.

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use byzopt::redundancy::check_redundancy_alt;
use byzopt::{Error, QuadraticCost64, Tolerances};
use clap::Args;

#[derive(Args, Debug)]
pub struct CheckArgs {
    /// JSON file holding an array of cost objects.
    pub costs: PathBuf,
    /// Redundancy degree to check: every subset of n - k agents must pin
    /// down the same shared minimizers.
    #[arg(long)]
    pub k: usize,
    /// Base numerical tolerance.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

/// Exit codes: 0 when the property holds, 1 with a witness when it is
/// violated, 2 when an agent's cost has no finite minimum or the input is
/// malformed.
pub fn cmd_check(args: &CheckArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.costs)
        .with_context(|| format!("reading {}", args.costs.display()))?;
    let costs: Vec<QuadraticCost64> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.costs.display()))?;
    let tol = Tolerances::with_base(args.tol);
    match check_redundancy_alt(&costs, args.k, &tol) {
        Ok(verdict) if verdict.holds => {
            let dim = verdict
                .common_argmin
                .as_ref()
                .and_then(|s| s.direction_dim())
                .unwrap_or(0);
            println!(
                "redundancy degree {} holds for {} costs (shared argmin dimension {dim})",
                args.k,
                costs.len()
            );
            Ok(0)
        }
        Ok(verdict) => {
            let (a, b) = verdict.witness.expect("violated verdicts carry a witness");
            if a == b {
                println!(
                    "redundancy degree {} violated: agents {a:?} share no common minimizer",
                    args.k
                );
            } else {
                println!(
                    "redundancy degree {} violated: subsets {a:?} and {b:?} pin down different minimizers",
                    args.k
                );
            }
            Ok(1)
        }
        Err(e @ Error::AssumptionViolated { .. }) => {
            eprintln!("{e}");
            Ok(2)
        }
        Err(e) => Err(e.into()),
    }
}
