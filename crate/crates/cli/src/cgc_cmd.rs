//! The `cgc` subcommand: one clipped-gradient descent run on a scenario.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use byzopt::adversary_sim::{build_gradient_oracle, Scenario};
use byzopt::cgc::{cgc_descend, CgcConfig};
use byzopt::Tolerances;
use clap::Args;
use nalgebra::DVector;

#[derive(Args, Debug)]
pub struct CgcArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub step_size: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    /// Stop once the aggregate norm drops to this value.
    #[arg(long, default_value_t = 1e-8)]
    pub stop_tol: f64,
    /// Reports to clip per round; defaults to the scenario's fault bound.
    #[arg(long)]
    pub clip: Option<usize>,
    /// Starting point as comma-separated values; defaults to the origin.
    #[arg(long)]
    pub x0: Option<String>,
    /// Write the per-round trace as CSV to this path.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Base numerical tolerance for scenario validation.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

fn parse_x0(text: &str, d: usize) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .context("parsing --x0")?;
    if parts.len() != d {
        bail!(
            "--x0 has {} components, scenario dimension is {d}",
            parts.len()
        );
    }
    Ok(parts)
}

pub fn cmd_cgc(args: &CgcArgs) -> Result<i32> {
    let text = fs::read_to_string(&args.scenario)
        .with_context(|| format!("reading {}", args.scenario.display()))?;
    let scenario: Scenario<f64> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.scenario.display()))?;
    let tol = Tolerances::with_base(args.tol);
    scenario.validate(&tol)?;

    let x0 = match &args.x0 {
        Some(text) => parse_x0(text, scenario.d)?,
        None => vec![0.0; scenario.d],
    };
    let config = CgcConfig::new(
        args.step_size,
        args.max_iters,
        args.stop_tol,
        args.clip.unwrap_or(scenario.t_bound),
        x0,
    )?;
    let mut oracle = build_gradient_oracle(&scenario, &tol)?;
    let run = cgc_descend(&mut oracle, &config)?;

    let rounds = |k: usize| if k == 1 { "round" } else { "rounds" };
    if run.converged {
        println!(
            "converged after {} {}",
            run.iterations_run,
            rounds(run.iterations_run)
        );
    } else {
        println!(
            "stopped at the round cap ({} {})",
            run.iterations_run,
            rounds(run.iterations_run)
        );
    }
    let final_x = DVector::from_row_slice(&run.final_x);
    println!(
        "final x: [{}]",
        run.final_x
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("final x norm: {}", final_x.norm());
    if let Some(path) = &args.trace {
        let file =
            fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        run.write_csv(file)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("trace written to {}", path.display());
    }
    Ok(0)
}
