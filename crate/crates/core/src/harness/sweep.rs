//! Weight sweeps and grid checks against brute-force fronts.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ProblemSpec};
use super::run::{clean_problem, run_experiment, Shared};
use super::HarnessError;
use crate::objective::{ObjectivePair, TwoObjectiveProblem};
use crate::pareto::{
    cluster_pairs, dominated_beyond, non_dominated_indices, random_weights, square_grid,
    verify_theorem1, TheoremReport,
};
use crate::scalarize::Scalarization;
use crate::vector::{ParamVector, RngHandle};

/// Objective-space tolerance for front membership and clustering.
pub const FRONT_TOLERANCE: f64 = 0.05;

/// Points `(x, y, 0, …, 0)` with `(x, y)` on a square grid over `[lo, hi]²`.
pub fn slice_grid(dim: usize, lo: f64, hi: f64, resolution: usize) -> Vec<ParamVector> {
    square_grid(lo, hi, resolution)
        .into_iter()
        .map(|p| {
            let mut t = p.into_inner();
            t.resize(dim, 0.0);
            ParamVector::new(t).expect("finite grid point")
        })
        .collect()
}

/// Evaluates `grid` in parallel.
pub fn evaluate_grid(
    problem: &TwoObjectiveProblem,
    grid: &[ParamVector],
) -> Result<Vec<ObjectivePair>, HarnessError> {
    grid.par_iter()
        .map(|t| problem.evaluate_pair(t).map_err(HarnessError::from))
        .collect()
}

fn analytic_problem(config: &ExperimentConfig) -> Result<TwoObjectiveProblem, HarnessError> {
    match &config.problem {
        ProblemSpec::TwoQuadratic(_) | ProblemSpec::ConcaveFront(_) => {
            Ok(clean_problem(config, &Shared::Plain)?.expect("analytic problems are two-objective"))
        }
        other => Err(HarnessError::Unsupported(format!(
            "grid oracles need an analytic problem, got {}",
            problem_name(other)
        ))),
    }
}

fn problem_name(p: &ProblemSpec) -> &'static str {
    match p {
        ProblemSpec::TwoQuadratic(_) => "two-quadratic",
        ProblemSpec::ConcaveFront(_) => "concave-front",
        ProblemSpec::ToyAnonymizer(_) => "toy-anonymizer",
        ProblemSpec::NoisySphere(_) => "noisy-sphere",
    }
}

/// Checks grid minimizers of `scalarization` against the grid front for `lambdas`
/// random weights, on a `resolution²` grid over the first two coordinates in `[−2, 2]`.
pub fn theorem_check(
    config: &ExperimentConfig,
    scalarization: Scalarization,
    lambdas: usize,
    resolution: usize,
    rng: &mut RngHandle,
) -> Result<TheoremReport, HarnessError> {
    let problem = analytic_problem(config)?;
    let grid = slice_grid(problem.dim(), -2.0, 2.0, resolution);
    let pairs = evaluate_grid(&problem, &grid)?;
    let weights = random_weights(lambdas, rng);
    Ok(verify_theorem1(
        &pairs,
        &weights,
        &config.scalarization_config(),
        scalarization,
        200,
    )?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: [f64; 2],
    /// Last logged pair of the run; absent if it diverged before logging.
    pub pair: Option<ObjectivePair>,
    pub on_front: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    /// Representatives of the distinct front clusters reached.
    pub clusters: Vec<ObjectivePair>,
    pub interior_clusters: usize,
    /// Every cluster sits at one of the two ends of the front.
    pub extremes_only: bool,
    pub front_extremes: [ObjectivePair; 2],
    pub tolerance: f64,
}

fn near(a: &ObjectivePair, b: &ObjectivePair, tol: f64) -> bool {
    (a.blackbox - b.blackbox).abs() <= tol && (a.whitebox - b.whitebox).abs() <= tol
}

/// Runs the configured algorithm once per weight (first seed only) and maps the final
/// pairs onto a reference front.
///
/// The reference front is built from every pair logged in the sweep, plus a grid over
/// the first two coordinates for the analytic problems.
pub fn sweep_lambda(
    config: &ExperimentConfig,
    lambdas: &[[f64; 2]],
) -> Result<SweepReport, HarnessError> {
    if lambdas.is_empty() {
        return Err(HarnessError::Unsupported("the weight grid is empty".into()));
    }
    for l in lambdas {
        if !(l[0] > 0.0 && l[1] > 0.0) {
            return Err(HarnessError::Unsupported(format!(
                "weights must be strictly positive, got ({}, {})",
                l[0], l[1]
            )));
        }
    }
    if !config.problem.is_two_objective() {
        return Err(HarnessError::Unsupported("weight sweeps need two objectives".into()));
    }
    let runs = lambdas
        .par_iter()
        .map(|&lambda| {
            let mut c = config.clone();
            c.scalarization.lambda = lambda;
            c.seeds.truncate(1);
            run_experiment(&c).map(|r| r.runs.into_iter().next().expect("one seed"))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut reference: Vec<ObjectivePair> = runs
        .iter()
        .flat_map(|r| r.trajectory.iter().map(|s| s.pair))
        .collect();
    if let Ok(problem) = analytic_problem(config) {
        let grid = slice_grid(problem.dim(), -2.0, 2.0, 101);
        reference.extend(evaluate_grid(&problem, &grid)?);
    }
    let front: Vec<ObjectivePair> = non_dominated_indices(&reference)?
        .into_iter()
        .map(|i| reference[i])
        .collect();
    let by = |key: fn(&ObjectivePair) -> f64| {
        *front
            .iter()
            .min_by(|a, b| key(a).total_cmp(&key(b)))
            .expect("front is non-empty")
    };
    let extremes = [by(|p| p.blackbox), by(|p| p.whitebox)];

    let entries: Vec<SweepEntry> = lambdas
        .iter()
        .zip(&runs)
        .map(|(&lambda, run)| {
            let pair = run.final_pair();
            SweepEntry {
                lambda,
                pair,
                on_front: pair.is_some_and(|p| !dominated_beyond(&p, &front, FRONT_TOLERANCE)),
            }
        })
        .collect();
    let reached: Vec<ObjectivePair> = entries
        .iter()
        .filter(|e| e.on_front)
        .filter_map(|e| e.pair)
        .collect();
    let clusters = cluster_pairs(&reached, FRONT_TOLERANCE);
    let interior = clusters
        .iter()
        .filter(|c| !extremes.iter().any(|e| near(c, e, FRONT_TOLERANCE)))
        .count();
    Ok(SweepReport {
        entries,
        interior_clusters: interior,
        extremes_only: interior == 0,
        clusters,
        front_extremes: extremes,
        tolerance: FRONT_TOLERANCE,
    })
}

/// Evenly spaced strictly positive weights `(λ, 1 − λ)`.
pub fn weight_grid(points: usize) -> Vec<[f64; 2]> {
    (0..points)
        .map(|i| {
            let l1 = (i as f64 + 0.5) / points as f64;
            [l1, 1.0 - l1]
        })
        .collect()
}

/// Parses one weight pair per line, separated by whitespace or a comma. Blank lines and
/// lines starting with `#` are skipped.
pub fn parse_lambdas(text: &str) -> Result<Vec<[f64; 2]>, HarnessError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|p| !p.is_empty())
            .collect();
        let parsed: Option<Vec<f64>> = parts.iter().map(|p| p.parse().ok()).collect();
        match parsed.as_deref() {
            Some([a, b]) => out.push([*a, *b]),
            _ => {
                return Err(HarnessError::Unsupported(format!(
                    "line {}: expected two numbers, got {line:?}",
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}
