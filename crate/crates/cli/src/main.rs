//! `tradeoff`: run experiments, sweep weights, check grid optimality and summarize
//! record files.
//!
//! Exit codes: 0 success, 1 bad config or usage, 2 every seed diverged, 3 every seed
//! ran out of budget, 4 a grid check failed.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tradeoff::harness::{
    emit_report, load_config, parse_lambdas, run_experiment, summarize_record_file,
    summary_table, sweep_lambda, theorem_check, ExperimentConfig, HarnessError,
};
use tradeoff::scalarize::Scalarization;
use tradeoff::RngHandle;

const CONFIG_ERROR: u8 = 1;
const ALL_DIVERGED: u8 = 2;
const ALL_BUDGET_EXHAUSTED: u8 = 3;
const CHECK_FAILED: u8 = 4;

#[derive(Parser)]
#[command(name = "tradeoff", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment.
    Run {
        config: PathBuf,
        /// Write record files, summary and config echo here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
    },
    /// Run once per weight pair and map the final points onto the front.
    Sweep {
        config: PathBuf,
        /// One weight pair per line.
        #[arg(long)]
        lambdas: PathBuf,
    },
    /// Check that grid minimizers of the augmented Tchebycheff loss are non-dominated.
    #[command(name = "verify-theorem1")]
    VerifyTheorem1 {
        config: PathBuf,
        #[arg(long, default_value_t = 20)]
        weights: usize,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Summarize a record file.
    Report { record_file: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    load_config(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(CONFIG_ERROR)
    })
}

fn fail(e: HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(CONFIG_ERROR)
}

fn run(config: PathBuf, out: Option<PathBuf>, seed_override: Option<u64>) -> Result<ExitCode, ExitCode> {
    let mut config = load(&config)?;
    if let Some(seed) = seed_override {
        config.seeds = vec![seed];
    }
    let report = run_experiment(&config).map_err(fail)?;
    print!("{}", summary_table(&report));
    if let Some(dir) = out {
        emit_report(&report, &dir).map_err(fail)?;
        println!("wrote {}", dir.display());
    }
    Ok(if report.all_diverged() {
        ExitCode::from(ALL_DIVERGED)
    } else if report.all_budget_exhausted() {
        ExitCode::from(ALL_BUDGET_EXHAUSTED)
    } else {
        ExitCode::SUCCESS
    })
}

fn sweep(config: PathBuf, lambdas: PathBuf) -> Result<ExitCode, ExitCode> {
    let config = load(&config)?;
    let text = std::fs::read_to_string(&lambdas).map_err(|e| {
        eprintln!("error: {}: {e}", lambdas.display());
        ExitCode::from(CONFIG_ERROR)
    })?;
    let weights = parse_lambdas(&text).map_err(fail)?;
    let report = sweep_lambda(&config, &weights).map_err(fail)?;
    println!("{:>10} {:>10} {:>12} {:>12} {:>8}", "lambda1", "lambda2", "L_blackbox", "L_whitebox", "front");
    for e in &report.entries {
        let (a, b) = e.pair.map_or((f64::NAN, f64::NAN), |p| (p.blackbox, p.whitebox));
        println!(
            "{:>10.4} {:>10.4} {:>12.6} {:>12.6} {:>8}",
            e.lambda[0], e.lambda[1], a, b, e.on_front
        );
    }
    println!(
        "{} front clusters (tolerance {}), {} interior, extremes only: {}",
        report.clusters.len(),
        report.tolerance,
        report.interior_clusters,
        report.extremes_only
    );
    Ok(ExitCode::SUCCESS)
}

fn verify(config: PathBuf, weights: usize, resolution: usize) -> Result<ExitCode, ExitCode> {
    let config = load(&config)?;
    let seed = config.seeds[0];
    let mut passed = true;
    for scalarization in [Scalarization::AugmentedTchebycheff, Scalarization::WeightedSum] {
        let mut rng = RngHandle::new(seed, 3);
        let report = theorem_check(&config, scalarization, weights, resolution, &mut rng).map_err(fail)?;
        println!(
            "{scalarization:?} on a {resolution}x{resolution} grid ({} front points):",
            report.front_size
        );
        for v in &report.verdicts {
            println!(
                "  lambda ({:.4}, {:.4}) -> ({:.6}, {:.6}) non-dominated {} extreme {}",
                v.lambda[0], v.lambda[1], v.pair.blackbox, v.pair.whitebox, v.non_dominated, v.at_extreme
            );
        }
        println!(
            "  {}/{} non-dominated, front coverage {:.3}, extremes only {}",
            report.passed_count(),
            report.verdicts.len(),
            report.coverage,
            report.extremes_only()
        );
        if scalarization == Scalarization::AugmentedTchebycheff {
            passed = report.passed();
        }
    }
    Ok(if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK_FAILED)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config, out, seed_override } => run(config, out, seed_override),
        Command::Sweep { config, lambdas } => sweep(config, lambdas),
        Command::VerifyTheorem1 { config, weights, resolution } => verify(config, weights, resolution),
        Command::Report { record_file } => summarize_record_file(&record_file)
            .map(|s| {
                print!("{s}");
                ExitCode::SUCCESS
            })
            .map_err(fail),
    };
    result.unwrap_or_else(|code| code)
}
