//! `chaoslab`: configuration-driven experiments over dyadic chaos
//! expansions with self-describing JSON/CSV reports.
//!
//! Exit codes: 0 all checks passed, 1 at least one check failed, 2 usage
//! or configuration error, 3 computational error.

mod config;
mod experiments;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::{OutputFormat, Params, UsageError};
use report::Report;

#[derive(Parser)]
#[command(
    name = "chaoslab",
    version,
    about = "Numerical experiments with order-2 Rademacher chaos in symmetric function spaces"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file: {"parameters": {...}, "seed": N, "output": "...",
    /// "format": "json"|"csv"}.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Inline parameter override, repeatable: --param key=value (values
    /// parsed as JSON when possible).
    #[arg(long = "param", global = true)]
    params: Vec<String>,

    /// Seed for every randomized draw (default 0).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Report format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Cap every working resolution at this level.
    #[arg(long, global = true)]
    level: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit sample step functions, coefficient families, or sign patterns.
    Gen,
    /// Evaluate one norm of a step function.
    Norm,
    /// Partial-sum projection ratios over random coefficient draws.
    BasisConstant,
    /// Exhaustive sign-multiplier ratios for one coefficient family.
    Uncond,
    /// Norm-to-coefficient equivalence ratios over random draws.
    Khintchine,
    /// Random-sign averages, exact and Monte Carlo.
    Ruc,
    /// Rearrangement lower bound for weighted block sums.
    Lemma2,
    /// Logarithmic lower-bound witness from optimally signed blocks.
    Prop2,
    /// Marcinkiewicz-scale witness with interpolation chain.
    Prop3,
    /// Constant-1 sup-form interpolation inequality on random steps.
    Interp,
    /// Mixed-norm chain on the square.
    Mixed,
    /// Line-versus-square realization of one chaos expansion.
    SquareCompare,
    /// The full verification battery.
    Suite,
}

fn run(cli: &Cli) -> anyhow::Result<Report> {
    let params = Params::build(
        cli.config.as_ref(),
        &cli.params,
        cli.seed,
        cli.out.clone(),
        cli.format,
        cli.level,
    )?;
    let start = Instant::now();
    let mut report = match cli.command {
        Command::Gen => experiments::gen(&params)?,
        Command::Norm => experiments::norm_value(&params)?,
        Command::BasisConstant => experiments::basis_constant_experiment(&params)?,
        Command::Uncond => experiments::uncond_experiment(&params)?,
        Command::Khintchine => experiments::khintchine_experiment(&params)?,
        Command::Ruc => experiments::ruc_experiment(&params)?,
        Command::Lemma2 => experiments::lemma2_experiment(&params)?,
        Command::Prop2 => experiments::prop2_experiment(&params)?,
        Command::Prop3 => experiments::prop3_experiment(&params)?,
        Command::Interp => experiments::interp_experiment(&params)?,
        Command::Mixed => experiments::mixed_experiment(&params)?,
        Command::SquareCompare => experiments::square_compare_experiment(&params)?,
        Command::Suite => experiments::suite(&params)?,
    };
    report.wall_ms = start.elapsed().as_millis() as u64;

    let rendered = match params.format {
        OutputFormat::Json => report.to_json(),
        OutputFormat::Csv => report.to_csv(),
    };
    match &params.out {
        Some(path) => std::fs::write(path, rendered.as_bytes())
            .map_err(|e| anyhow::anyhow!("cannot write report to {}: {e}", path.display()))?,
        None => {
            if rendered.ends_with('\n') {
                print!("{rendered}");
            } else {
                println!("{rendered}");
            }
        }
    }
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(err) => {
            if err.downcast_ref::<UsageError>().is_some() {
                eprintln!("usage error: {err}");
                ExitCode::from(2)
            } else {
                eprintln!("computational error: {err:#}");
                ExitCode::from(3)
            }
        }
    }
}
