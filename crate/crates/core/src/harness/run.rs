//! Replicate runs of one configured experiment.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Algorithm, ExperimentConfig, ProblemSpec};
use super::HarnessError;
use crate::objective::{BlackBoxObjective, ObjectivePair, TwoObjectiveProblem};
use crate::optimizer::{
    evaluations_to_threshold, minimize_blackbox, optimize, OptimizeError, OptimizerConfig, Run,
    SingleObjectiveConfig, StepRecord, Termination,
};
use crate::pareto::dominates;
use crate::problems::{
    es_run, make_concave_front, make_toy_anonymizer, make_two_quadratic, noisy_sphere_benchmark,
    sphere, ToyAnonymizer,
};
use crate::vector::{ParamVector, RngHandle};

/// Stream ids derived from each replicate seed.
pub const OPTIMIZER_STREAM: u64 = 0;
pub const NOISE_STREAM: u64 = 1;
pub const ES_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SeedOutcome {
    Completed,
    BudgetExhausted { calls_used: u64 },
    EarlyStopped { step: u64 },
    Diverged { step: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub outcome: SeedOutcome,
    pub trajectory: Vec<StepRecord>,
    /// Final iterate; absent when the run diverged.
    pub theta: Option<ParamVector>,
    pub calls: u64,
    pub evals_to_threshold: Option<u64>,
    /// The last logged pair is not dominated by any other pair in the trajectory.
    /// Only meaningful for two-objective problems.
    pub non_dominated: Option<bool>,
}

impl SeedRun {
    pub fn final_pair(&self) -> Option<ObjectivePair> {
        self.trajectory.last().map(|r| r.pair)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub runs: Vec<SeedRun>,
}

impl RunReport {
    pub fn all_diverged(&self) -> bool {
        self.runs
            .iter()
            .all(|r| matches!(r.outcome, SeedOutcome::Diverged { .. }))
    }

    pub fn all_budget_exhausted(&self) -> bool {
        self.runs
            .iter()
            .all(|r| matches!(r.outcome, SeedOutcome::BudgetExhausted { .. }))
    }

    /// Median evaluations-to-threshold, counting runs that never got there as infinite.
    pub fn median_evals_to_threshold(&self) -> Option<f64> {
        let values: Vec<f64> = self
            .runs
            .iter()
            .map(|r| r.evals_to_threshold.map_or(f64::INFINITY, |v| v as f64))
            .collect();
        let m = median(values);
        m.is_finite().then_some(m)
    }
}

pub fn median(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let (lo, hi) = (values[n / 2 - 1], values[n / 2]);
        if hi.is_infinite() {
            hi
        } else {
            (lo + hi) / 2.0
        }
    }
}

/// Problem data shared by all replicates. Only the anonymizer is expensive to build.
pub(crate) enum Shared {
    Plain,
    Anonymizer(Arc<ToyAnonymizer>),
}

impl Shared {
    pub(crate) fn build(config: &ExperimentConfig) -> Result<Self, HarnessError> {
        Ok(match &config.problem {
            ProblemSpec::ToyAnonymizer(spec) => {
                let rng = RngHandle::new(spec.data_seed, 0);
                Shared::Anonymizer(Arc::new(make_toy_anonymizer(&rng, spec.anonymizer_spec())?))
            }
            _ => Shared::Plain,
        })
    }
}

/// A two-objective instance without noise or budget, for oracles.
pub(crate) fn clean_problem(
    config: &ExperimentConfig,
    shared: &Shared,
) -> Result<Option<TwoObjectiveProblem>, HarnessError> {
    Ok(match (&config.problem, shared) {
        (ProblemSpec::TwoQuadratic(s), _) => {
            let basis = |sign: f64| ParamVector::basis(s.dim, 0, sign);
            let c1 = match &s.c1 {
                Some(v) => ParamVector::new(v.clone())?,
                None => basis(1.0)?,
            };
            let c2 = match &s.c2 {
                Some(v) => ParamVector::new(v.clone())?,
                None => basis(-1.0)?,
            };
            Some(make_two_quadratic(s.dim, c1, c2)?)
        }
        (ProblemSpec::ConcaveFront(s), _) => Some(make_concave_front(s.dim)?),
        (ProblemSpec::ToyAnonymizer(_), Shared::Anonymizer(toy)) => Some(toy.problem()),
        _ => None,
    })
}

fn default_start(config: &ExperimentConfig, shared: &Shared) -> Result<ParamVector, HarnessError> {
    if let Some(t) = &config.theta0 {
        return Ok(ParamVector::new(t.clone())?);
    }
    let dim = config.problem.dim();
    Ok(match (&config.problem, shared) {
        (ProblemSpec::TwoQuadratic(_), _) => ParamVector::filled(dim, 3.0)?,
        (ProblemSpec::ConcaveFront(_), _) => {
            let mut t = vec![0.2; dim];
            t[0] = 0.5;
            ParamVector::new(t)?
        }
        (ProblemSpec::ToyAnonymizer(_), Shared::Anonymizer(toy)) => toy.theta0.clone(),
        _ => ParamVector::filled(dim, 1.0)?,
    })
}

fn prepare_blackbox(config: &ExperimentConfig, inner: BlackBoxObjective, seed: u64) -> BlackBoxObjective {
    let noisy = if config.noise > 0.0 {
        inner.make_noisy(config.noise, RngHandle::new(seed, NOISE_STREAM))
    } else {
        inner
    };
    noisy.with_budget(config.eval_budget())
}

fn outcome_of(termination: &Termination) -> SeedOutcome {
    match termination {
        Termination::Completed => SeedOutcome::Completed,
        Termination::BudgetExhausted { calls_used } => SeedOutcome::BudgetExhausted {
            calls_used: *calls_used,
        },
        Termination::EarlyStopped { step } => SeedOutcome::EarlyStopped { step: *step },
    }
}

fn finish(
    seed: u64,
    result: Result<Run, OptimizeError>,
    calls: u64,
) -> Result<(SeedOutcome, Vec<StepRecord>, Option<ParamVector>, u64), HarnessError> {
    match result {
        Ok(run) => Ok((outcome_of(&run.termination), run.trajectory, Some(run.theta), calls)),
        Err(OptimizeError::Divergence { step, trajectory }) => {
            Ok((SeedOutcome::Diverged { step }, trajectory, None, calls))
        }
        Err(e) => Err(HarnessError::Seed {
            seed,
            message: e.to_string(),
        }),
    }
}

fn run_seed(config: &ExperimentConfig, shared: &Shared, seed: u64) -> Result<SeedRun, HarnessError> {
    let theta0 = default_start(config, shared)?;
    let mut rng = RngHandle::new(seed, OPTIMIZER_STREAM);
    let gains = config.gain_schedule();

    if let Some(clean) = clean_problem(config, shared)? {
        let TwoObjectiveProblem { blackbox, whitebox } = clean;
        let problem = TwoObjectiveProblem::new(prepare_blackbox(config, blackbox, seed), whitebox);
        let scal = config
            .scalarization_config()
            .normalized()
            .map_err(|e| HarnessError::Seed { seed, message: e.to_string() })?;
        let opt = OptimizerConfig {
            scalarization: scal,
            objective: config.objective(),
            gains,
            history: config.history,
            components: config.components(),
            reuse_midpoint: config.reuse_midpoint,
            early_stop: config.early_stop,
        };
        let result = optimize(&problem, &opt, &theta0, config.iterations, &mut rng);
        let (outcome, trajectory, theta, calls) = finish(seed, result, problem.blackbox.calls())?;
        let evals = trajectory.first().and_then(|first| {
            let target = config.threshold_fraction * first.scalarized;
            (first.scalarized > 0.0)
                .then(|| trajectory.iter().find(|r| r.scalarized <= target))
                .flatten()
                .map(|r| r.cumulative_calls)
        });
        let non_dominated = trajectory.last().map(|last| {
            !trajectory.iter().any(|r| dominates(&r.pair, &last.pair))
        });
        return Ok(SeedRun {
            seed,
            outcome,
            trajectory,
            theta,
            calls,
            evals_to_threshold: evals,
            non_dominated,
        });
    }

    let ProblemSpec::NoisySphere(spec) = &config.problem else {
        unreachable!("every two-objective problem has a clean instance");
    };
    let obj = noisy_sphere_benchmark(spec.dim, config.noise, RngHandle::new(seed, NOISE_STREAM))?
        .with_budget(config.eval_budget());
    let result = match config.algorithm {
        Algorithm::EsBaseline => {
            let mut es_rng = RngHandle::new(seed, ES_STREAM);
            let run = es_run(&obj, &theta0, config.iterations, &config.es, &mut es_rng, &sphere)
                .map_err(|e| HarnessError::Seed { seed, message: e.to_string() })?;
            Ok(run)
        }
        _ => {
            let single = SingleObjectiveConfig {
                gains,
                history: config.history,
                components: config.components(),
                early_stop: config.early_stop,
            };
            minimize_blackbox(&obj, &single, &theta0, config.iterations, &mut rng, &sphere)
        }
    };
    let (outcome, trajectory, theta, calls) = finish(seed, result, obj.calls())?;
    let threshold = config.threshold_fraction * sphere(&theta0);
    Ok(SeedRun {
        seed,
        outcome,
        evals_to_threshold: evaluations_to_threshold(&trajectory, threshold),
        trajectory,
        theta,
        calls,
        non_dominated: None,
    })
}

/// Runs every seed, in parallel, and returns them in config order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport, HarnessError> {
    config.validate()?;
    let shared = Shared::build(config)?;
    let runs = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, &shared, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RunReport {
        config: config.clone(),
        runs,
    })
}
