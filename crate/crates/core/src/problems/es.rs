//! A minimal isotropic `(1, λ)` evolution strategy with a fixed mutation scale.

use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::objective::{BlackBoxObjective, ObjectiveError, ObjectiveIndex, ObjectivePair};
use crate::optimizer::{Run, StepRecord, Termination};
use crate::vector::{sample_gaussian, ParamVector, RngHandle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EsConfig {
    pub population: usize,
    pub step_scale: f64,
}

impl Default for EsConfig {
    fn default() -> Self {
        Self {
            population: 10,
            step_scale: 0.05,
        }
    }
}

impl EsConfig {
    pub fn validate(&self) -> Result<(), ProblemError> {
        if self.population < 2 {
            return Err(ProblemError::Population(self.population));
        }
        if !(self.step_scale > 0.0 && self.step_scale.is_finite()) {
            return Err(ProblemError::StepScale(self.step_scale));
        }
        Ok(())
    }
}

/// Each iteration samples `population` offspring around the parent, evaluates all of them
/// and makes the best one the next parent. Logged losses come from `monitor`.
pub fn es_run(
    obj: &BlackBoxObjective,
    theta0: &ParamVector,
    iterations: u64,
    config: &EsConfig,
    rng: &mut RngHandle,
    monitor: &dyn Fn(&ParamVector) -> f64,
) -> Result<Run, ProblemError> {
    config.validate()?;
    if theta0.dim() != obj.dim() {
        return Err(ObjectiveError::Dimension {
            expected: obj.dim(),
            actual: theta0.dim(),
        }
        .into());
    }
    let mut parent = theta0.clone();
    let mut trajectory = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let mut best: Option<(f64, ParamVector)> = None;
        for _ in 0..config.population {
            let child = sample_gaussian(rng, obj.dim())?.axpy(config.step_scale, &parent)?;
            let value = match obj.evaluate(&child) {
                Ok(v) => v,
                Err(ObjectiveError::BudgetExceeded { calls_used }) => {
                    return Ok(Run {
                        theta: parent,
                        trajectory,
                        termination: Termination::BudgetExhausted { calls_used },
                    });
                }
                Err(e) => return Err(e.into()),
            };
            if best.as_ref().is_none_or(|(b, _)| value < *b) {
                best = Some((value, child));
            }
        }
        parent = best.expect("population is non-empty").1;
        let loss = monitor(&parent);
        trajectory.push(StepRecord {
            step: k,
            pair: ObjectivePair::new(loss, 0.0),
            active: ObjectiveIndex::BlackBox,
            indicator: 0.0,
            step_size: config.step_scale,
            cumulative_calls: obj.calls(),
            scalarized: loss,
            critical_set: Vec::new(),
        });
    }
    Ok(Run {
        theta: parent,
        trajectory,
        termination: Termination::Completed,
    })
}

/// Runs the strategy and returns the final parent with the black-box calls it spent.
/// Running out of budget is an error here.
pub fn es_baseline(
    obj: &BlackBoxObjective,
    theta0: &ParamVector,
    iterations: u64,
    config: &EsConfig,
    rng: &mut RngHandle,
) -> Result<(ParamVector, u64), ProblemError> {
    let start = obj.calls();
    let run = es_run(obj, theta0, iterations, config, rng, &|_| 0.0)?;
    if let Termination::BudgetExhausted { calls_used } = run.termination {
        return Err(ObjectiveError::BudgetExceeded { calls_used }.into());
    }
    Ok((run.theta, obj.calls() - start))
}
