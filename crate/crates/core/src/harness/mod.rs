//! Experiment runner: configs, replicate runs, report files and weight sweeps.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{
    load_config, save_config, Ablation, Algorithm, ConcaveFrontSpec, ConfigError,
    ExperimentConfig, GainsSection, NoisySphereSpec, ProblemSpec, ScalarizationSection,
    ToyAnonymizerSpec, TwoQuadraticSpec,
};
pub use report::{
    emit_report, read_records, record_file_name, summarize_record_file, summary_table,
    write_records, RecordRow, RECORD_HEADER,
};
pub use run::{
    median, run_experiment, RunReport, SeedOutcome, SeedRun, ES_STREAM, NOISE_STREAM,
    OPTIMIZER_STREAM,
};
pub use sweep::{
    evaluate_grid, parse_lambdas, slice_grid, sweep_lambda, theorem_check, weight_grid,
    SweepEntry, SweepReport, FRONT_TOLERANCE,
};

use thiserror::Error;

use crate::objective::ObjectiveError;
use crate::pareto::ParetoError;
use crate::problems::ProblemError;
use crate::vector::VectorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Pareto(#[from] ParetoError),
    #[error(transparent)]
    Vector(#[from] VectorError),
    #[error("seed {seed}: {message}")]
    Seed { seed: u64, message: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Unsupported(String),
}
