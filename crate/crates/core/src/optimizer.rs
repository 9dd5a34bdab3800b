//! The critical-history SPSA optimizer.
//!
//! [`optimize`] runs the two-objective loop: per step it evaluates the pair at `θ_k`,
//! estimates the black-box gradient by SPSA, blends it with the critical history,
//! computes the status indicator, takes the exact white-box gradient, picks the active
//! Tchebycheff term and moves `θ` by `a_k` times the scalarized direction.
//!
//! [`minimize_blackbox`] is the same machinery on a single value-only loss; with every
//! component switched off it reduces to plain SPSA.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::{
    blend, status_indicator, CriticalGradientSet, HistoryConfig, HistoryError, RecordSummary,
    Selection,
};
use crate::objective::{BlackBoxObjective, ObjectiveError, ObjectiveIndex, ObjectivePair, TwoObjectiveProblem};
use crate::scalarize::{
    combined_gradient, tchebycheff, tchebycheff_gradient, weighted_sum_gradient, IdealMode,
    Scalarization, ScalarizationConfig, ScalarizeError,
};
use crate::spsa::{estimate_gradient, GainSchedule, SpsaError};
use crate::vector::{ParamVector, RngHandle, VectorError};

/// Parameter norm beyond which a run is declared divergent.
pub const DIVERGENCE_NORM: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("diverged at step {step}")]
    Divergence {
        step: u64,
        trajectory: Vec<StepRecord>,
    },
    #[error("parameter dimension {actual} does not match problem dimension {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error(transparent)]
    Spsa(#[from] SpsaError),
    #[error(transparent)]
    History(#[from] HistoryError),
    #[error(transparent)]
    Scalarize(#[from] ScalarizeError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

impl OptimizeError {
    fn is_budget(&self) -> bool {
        match self {
            OptimizeError::Objective(ObjectiveError::BudgetExceeded { .. }) => true,
            OptimizeError::Spsa(e) => e.is_budget(),
            _ => false,
        }
    }
}

/// Which parts of the critical-history scheme are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    /// Keep a gradient store at all. Off means raw estimates and a neutral indicator.
    pub history: bool,
    /// Importance-based replacement; off keeps the latest `m` estimates.
    pub critical_selection: bool,
    /// Use the blended gradient in the update.
    pub direction_adjust: bool,
    /// Scale the black-box term by `1 + I_k`.
    pub stepsize_adjust: bool,
}

impl Components {
    pub const fn full() -> Self {
        Self {
            history: true,
            critical_selection: true,
            direction_adjust: true,
            stepsize_adjust: true,
        }
    }

    pub const fn none() -> Self {
        Self {
            history: false,
            critical_selection: false,
            direction_adjust: false,
            stepsize_adjust: false,
        }
    }
}

impl Default for Components {
    fn default() -> Self {
        Self::full()
    }
}

/// Stop when the trailing-window mean of the scalarized loss stops improving.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EarlyStop {
    pub window: usize,
    pub tolerance: f64,
}

impl EarlyStop {
    fn triggered(&self, trajectory: &[StepRecord]) -> bool {
        let w = self.window;
        if w == 0 || trajectory.len() < 2 * w {
            return false;
        }
        let n = trajectory.len();
        let mean = |s: &[StepRecord]| s.iter().map(|r| r.scalarized).sum::<f64>() / w as f64;
        let previous = mean(&trajectory[n - 2 * w..n - w]);
        let latest = mean(&trajectory[n - w..]);
        previous - latest < self.tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub scalarization: ScalarizationConfig,
    pub objective: Scalarization,
    pub gains: GainSchedule,
    pub history: HistoryConfig,
    pub components: Components,
    /// Use `(f⁺ + f⁻)/2` from the SPSA pair as the black-box loss at `θ_k`
    /// instead of spending a third call per step.
    pub reuse_midpoint: bool,
    pub early_stop: Option<EarlyStop>,
}

impl OptimizerConfig {
    pub fn new(scalarization: ScalarizationConfig, gains: GainSchedule) -> Self {
        Self {
            scalarization,
            objective: Scalarization::AugmentedTchebycheff,
            gains,
            history: HistoryConfig::default(),
            components: Components::full(),
            reuse_midpoint: false,
            early_stop: None,
        }
    }

    /// Black-box calls spent per completed step.
    pub fn calls_per_step(&self) -> u64 {
        if self.reuse_midpoint {
            2
        } else {
            3
        }
    }

    pub fn validate(&self) -> Result<(), OptimizeError> {
        self.scalarization.validate()?;
        self.gains.validate()?;
        self.history.validate()?;
        Ok(())
    }
}

/// One optimizer step as it appears in trajectory logs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub pair: ObjectivePair,
    pub active: ObjectiveIndex,
    /// Status indicator `I_k` that entered the update.
    pub indicator: f64,
    /// Effective black-box step `(1 + I_k) a_k`.
    pub step_size: f64,
    pub cumulative_calls: u64,
    /// Value of the driving scalarization at `pair`.
    pub scalarized: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub critical_set: Vec<RecordSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Termination {
    Completed,
    BudgetExhausted { calls_used: u64 },
    EarlyStopped { step: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub theta: ParamVector,
    pub trajectory: Vec<StepRecord>,
    pub termination: Termination,
}

/// Applies the history components to a raw estimate.
struct Enhancer {
    store: Option<CriticalGradientSet>,
    config: HistoryConfig,
    components: Components,
}

struct Enhanced {
    direction: ParamVector,
    indicator: f64,
}

impl Enhancer {
    fn new(config: HistoryConfig, components: Components) -> Result<Self, HistoryError> {
        config.validate()?;
        let store = if components.history {
            let selection = if components.critical_selection {
                Selection::Critical
            } else {
                Selection::Fifo
            };
            Some(CriticalGradientSet::with_selection(
                config.capacity,
                config.decay,
                selection,
            )?)
        } else {
            None
        };
        Ok(Self {
            store,
            config,
            components,
        })
    }

    fn enhance(&self, g_hat: &ParamVector) -> Result<Enhanced, HistoryError> {
        let Some(store) = &self.store else {
            return Ok(Enhanced {
                direction: g_hat.clone(),
                indicator: 0.0,
            });
        };
        let blended = blend(store, g_hat, self.config.blend_gamma)?;
        let indicator = status_indicator(g_hat, &blended, self.config.magnitude)?.value;
        Ok(Enhanced {
            direction: if self.components.direction_adjust {
                blended
            } else {
                g_hat.clone()
            },
            indicator: if self.components.stepsize_adjust {
                indicator
            } else {
                0.0
            },
        })
    }

    /// Offers the raw estimate to the store; runs after blending so it is never counted twice.
    fn record(&mut self, g_hat: ParamVector, step: u64) -> Result<(), HistoryError> {
        if let Some(store) = &mut self.store {
            store.maybe_insert(g_hat, step)?;
        }
        Ok(())
    }

    fn summary(&self) -> Vec<RecordSummary> {
        self.store.as_ref().map(|s| s.summary()).unwrap_or_default()
    }
}

fn diverged(theta: &ParamVector) -> bool {
    theta.l2_norm() > DIVERGENCE_NORM
}

/// Runs the two-objective optimizer for `iterations` steps from `theta0`.
///
/// Running out of black-box budget ends the run early with
/// [`Termination::BudgetExhausted`]; a partially completed step is discarded.
pub fn optimize(
    problem: &TwoObjectiveProblem,
    config: &OptimizerConfig,
    theta0: &ParamVector,
    iterations: u64,
    rng: &mut RngHandle,
) -> Result<Run, OptimizeError> {
    config.validate()?;
    if theta0.dim() != problem.dim() {
        return Err(OptimizeError::Dimension {
            expected: problem.dim(),
            actual: theta0.dim(),
        });
    }
    let mut enhancer = Enhancer::new(config.history, config.components)?;
    let mut scal = config.scalarization;
    let mut ideal_seen = false;
    let mut theta = theta0.clone();
    let mut trajectory = Vec::with_capacity(iterations as usize);

    for k in 1..=iterations {
        let outcome = two_objective_step(problem, config, &mut enhancer, &mut scal, &mut ideal_seen, &theta, k, rng);
        let (next, record) = match outcome {
            Ok(v) => v,
            Err(e) if e.is_budget() => {
                return Ok(Run {
                    theta,
                    trajectory,
                    termination: Termination::BudgetExhausted {
                        calls_used: problem.blackbox.calls(),
                    },
                });
            }
            Err(OptimizeError::Vector(VectorError::NonFinite { .. })) => {
                return Err(OptimizeError::Divergence { step: k, trajectory });
            }
            Err(e) => return Err(e),
        };
        trajectory.push(record);
        if diverged(&next) {
            return Err(OptimizeError::Divergence { step: k, trajectory });
        }
        theta = next;
        if let Some(stop) = &config.early_stop {
            if stop.triggered(&trajectory) {
                return Ok(Run {
                    theta,
                    trajectory,
                    termination: Termination::EarlyStopped { step: k },
                });
            }
        }
    }
    Ok(Run {
        theta,
        trajectory,
        termination: Termination::Completed,
    })
}

#[allow(clippy::too_many_arguments)]
fn two_objective_step(
    problem: &TwoObjectiveProblem,
    config: &OptimizerConfig,
    enhancer: &mut Enhancer,
    scal: &mut ScalarizationConfig,
    ideal_seen: &mut bool,
    theta: &ParamVector,
    k: u64,
    rng: &mut RngHandle,
) -> Result<(ParamVector, StepRecord), OptimizeError> {
    let (a_k, _) = config.gains.gain_at(k)?;
    let fresh = if config.reuse_midpoint {
        None
    } else {
        Some(problem.evaluate_pair(theta)?)
    };
    let estimate = estimate_gradient(&problem.blackbox, theta, k, &config.gains, rng)?;
    let pair = match fresh {
        Some(pair) => pair,
        None => ObjectivePair::new(estimate.midpoint(), problem.whitebox_value(theta)?),
    };
    if config.scalarization.ideal_mode == IdealMode::Tracking {
        if *ideal_seen {
            scal.ideal = [scal.ideal[0].min(pair.blackbox), scal.ideal[1].min(pair.whitebox)];
        } else {
            scal.ideal = pair.as_array();
            *ideal_seen = true;
        }
    }

    let enhanced = enhancer.enhance(&estimate.gradient)?;
    let h = problem.whitebox_gradient(theta)?;
    let (_, active) = tchebycheff(&pair, scal);
    let direction = match config.objective {
        Scalarization::AugmentedTchebycheff => combined_gradient(
            &enhanced.direction,
            &h,
            enhanced.indicator,
            active,
            scal.lambda,
            scal.sigma,
        )?,
        Scalarization::Tchebycheff => {
            tchebycheff_gradient(&enhanced.direction, &h, enhanced.indicator, active, scal.lambda)?
        }
        Scalarization::WeightedSum => {
            weighted_sum_gradient(&enhanced.direction, &h, enhanced.indicator, scal.lambda)?
        }
    };
    let next = direction.axpy(-a_k, theta)?;
    enhancer.record(estimate.gradient, k)?;

    let record = StepRecord {
        step: k,
        pair,
        active,
        indicator: enhanced.indicator,
        step_size: (1.0 + enhanced.indicator) * a_k,
        cumulative_calls: problem.blackbox.calls(),
        scalarized: config.objective.value(&pair, scal),
        critical_set: enhancer.summary(),
    };
    Ok((next, record))
}

/// Settings for the single-objective variant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleObjectiveConfig {
    pub gains: GainSchedule,
    pub history: HistoryConfig,
    pub components: Components,
    pub early_stop: Option<EarlyStop>,
}

impl SingleObjectiveConfig {
    pub fn plain_spsa(gains: GainSchedule) -> Self {
        Self {
            gains,
            history: HistoryConfig::default(),
            components: Components::none(),
            early_stop: None,
        }
    }
}

/// Minimizes one black-box loss with the critical-history update
/// `θ ← θ - (1 + I_k) a_k g̃_k`.
///
/// `monitor` reports the loss logged for each new iterate; it is called outside the
/// black-box counter, so it may be the noiseless loss of a noisy benchmark. Each
/// record therefore describes `θ_{k+1}`. Two black-box calls per step.
pub fn minimize_blackbox(
    obj: &BlackBoxObjective,
    config: &SingleObjectiveConfig,
    theta0: &ParamVector,
    iterations: u64,
    rng: &mut RngHandle,
    monitor: &dyn Fn(&ParamVector) -> f64,
) -> Result<Run, OptimizeError> {
    config.gains.validate()?;
    if theta0.dim() != obj.dim() {
        return Err(OptimizeError::Dimension {
            expected: obj.dim(),
            actual: theta0.dim(),
        });
    }
    let mut enhancer = Enhancer::new(config.history, config.components)?;
    let mut theta = theta0.clone();
    let mut trajectory = Vec::with_capacity(iterations as usize);
    for k in 1..=iterations {
        let (a_k, _) = config.gains.gain_at(k)?;
        let estimate = match estimate_gradient(obj, &theta, k, &config.gains, rng) {
            Ok(e) => e,
            Err(e) if e.is_budget() => {
                return Ok(Run {
                    theta,
                    trajectory,
                    termination: Termination::BudgetExhausted {
                        calls_used: obj.calls(),
                    },
                });
            }
            Err(SpsaError::NonFiniteEstimate { .. }) => {
                return Err(OptimizeError::Divergence { step: k, trajectory });
            }
            Err(e) => return Err(e.into()),
        };
        let enhanced = enhancer.enhance(&estimate.gradient)?;
        let step_size = (1.0 + enhanced.indicator) * a_k;
        let next = match enhanced.direction.axpy(-step_size, &theta) {
            Ok(next) if !diverged(&next) => next,
            Ok(_) | Err(VectorError::NonFinite { .. }) => {
                return Err(OptimizeError::Divergence { step: k, trajectory });
            }
            Err(e) => return Err(e.into()),
        };
        enhancer.record(estimate.gradient, k)?;
        let loss = monitor(&next);
        trajectory.push(StepRecord {
            step: k,
            pair: ObjectivePair::new(loss, 0.0),
            active: ObjectiveIndex::BlackBox,
            indicator: enhanced.indicator,
            step_size,
            cumulative_calls: obj.calls(),
            scalarized: loss,
            critical_set: enhancer.summary(),
        });
        theta = next;
        if let Some(stop) = &config.early_stop {
            if stop.triggered(&trajectory) {
                return Ok(Run {
                    theta,
                    trajectory,
                    termination: Termination::EarlyStopped { step: k },
                });
            }
        }
    }
    Ok(Run {
        theta,
        trajectory,
        termination: Termination::Completed,
    })
}

/// Black-box calls spent before the first logged loss at or below `threshold`.
pub fn evaluations_to_threshold(trajectory: &[StepRecord], threshold: f64) -> Option<u64> {
    trajectory
        .iter()
        .find(|r| r.pair.blackbox <= threshold)
        .map(|r| r.cumulative_calls)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::WhiteBoxObjective;
    use crate::spsa::spsa_step;

    struct Shifted {
        center: Vec<f64>,
    }

    impl WhiteBoxObjective for Shifted {
        fn dim(&self) -> usize {
            self.center.len()
        }
        fn value(&self, t: &ParamVector) -> f64 {
            t.as_slice().iter().zip(&self.center).map(|(x, c)| (x - c).powi(2)).sum()
        }
        fn gradient(&self, t: &ParamVector) -> ParamVector {
            ParamVector::new(t.as_slice().iter().zip(&self.center).map(|(x, c)| 2.0 * (x - c)).collect()).unwrap()
        }
    }

    fn quad_problem() -> TwoObjectiveProblem {
        let bb = BlackBoxObjective::from_fn(2, |t| {
            (t.as_slice()[0] - 1.0).powi(2) + t.as_slice()[1].powi(2)
        });
        TwoObjectiveProblem::new(bb, Box::new(Shifted { center: vec![-1.0, 0.0] }))
    }

    fn config(iterations: u64) -> OptimizerConfig {
        OptimizerConfig::new(ScalarizationConfig::default(), GainSchedule::for_iterations(iterations))
    }

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn zero_iterations_is_a_no_op() {
        let p = quad_problem();
        let run = optimize(&p, &config(10), &pv(&[3.0, 3.0]), 0, &mut RngHandle::new(1, 0)).unwrap();
        assert_eq!(run.theta, pv(&[3.0, 3.0]));
        assert!(run.trajectory.is_empty());
        assert_eq!(run.termination, Termination::Completed);
        assert_eq!(p.blackbox.calls(), 0);
    }

    #[test]
    fn runs_are_deterministic() {
        let go = || {
            let p = quad_problem();
            optimize(&p, &config(200), &pv(&[3.0, 3.0]), 200, &mut RngHandle::new(7, 0)).unwrap()
        };
        assert_eq!(go(), go());
    }

    #[test]
    fn call_accounting_matches_policy() {
        for reuse in [false, true] {
            let p = quad_problem();
            let mut cfg = config(50);
            cfg.reuse_midpoint = reuse;
            let run = optimize(&p, &cfg, &pv(&[3.0, 3.0]), 50, &mut RngHandle::new(3, 0)).unwrap();
            assert_eq!(run.trajectory.len(), 50);
            let per = cfg.calls_per_step();
            for (i, r) in run.trajectory.iter().enumerate() {
                assert_eq!(r.cumulative_calls, per * (i as u64 + 1));
            }
            assert_eq!(p.blackbox.calls(), 50 * per);
        }
    }

    #[test]
    fn budget_truncates_with_marker() {
        let mut p = quad_problem();
        p.blackbox = p.blackbox.clone().with_budget(crate::objective::EvalBudget::Limited(10));
        let run = optimize(&p, &config(100), &pv(&[3.0, 3.0]), 100, &mut RngHandle::new(3, 0)).unwrap();
        assert_eq!(run.trajectory.len(), 3);
        assert_eq!(run.termination, Termination::BudgetExhausted { calls_used: 10 });
    }

    #[test]
    fn huge_steps_report_divergence() {
        let p = quad_problem();
        let mut cfg = config(100);
        cfg.gains.a = 1e4;
        cfg.gains.stability = 0.0;
        let err = optimize(&p, &cfg, &pv(&[3.0, 3.0]), 100, &mut RngHandle::new(3, 0)).unwrap_err();
        match err {
            OptimizeError::Divergence { step, trajectory } => {
                assert!(step >= 1);
                assert_eq!(trajectory.len() as u64, step);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn weighted_sum_variant_matches_when_active_terms_agree() {
        // Both variants start from the same state; with history off their first steps
        // differ only through the choice of direction.
        let p1 = quad_problem();
        let p2 = quad_problem();
        let mut cfg = config(1);
        let at = optimize(&p1, &cfg, &pv(&[3.0, 3.0]), 1, &mut RngHandle::new(5, 0)).unwrap();
        cfg.objective = Scalarization::WeightedSum;
        let ws = optimize(&p2, &cfg, &pv(&[3.0, 3.0]), 1, &mut RngHandle::new(5, 0)).unwrap();
        assert_eq!(at.trajectory[0].pair, ws.trajectory[0].pair);
        assert_ne!(at.theta, ws.theta);
    }

    #[test]
    fn ablations_agree_with_full_method_while_inactive() {
        let run = |components: Components, steps: u64| {
            let p = quad_problem();
            let mut cfg = config(50);
            cfg.components = components;
            optimize(&p, &cfg, &pv(&[3.0, 3.0]), steps, &mut RngHandle::new(9, 0)).unwrap()
        };
        // FIFO and importance selection only differ once the store is full (m = 5).
        let fifo = Components { critical_selection: false, ..Components::full() };
        assert_eq!(run(fifo, 6).theta, run(Components::full(), 6).theta);
        // An empty store blends to the raw estimate.
        let raw = Components { direction_adjust: false, ..Components::full() };
        assert_eq!(run(raw, 1).theta, run(Components::full(), 1).theta);
        // Without history the first evaluated pair is unchanged; only the update differs.
        let none = Components { history: false, ..Components::full() };
        assert_eq!(run(none, 1).trajectory[0].pair, run(Components::full(), 1).trajectory[0].pair);
        assert_eq!(run(none, 1).trajectory[0].indicator, 0.0);
    }

    #[test]
    fn early_stop_triggers_on_plateau() {
        let p = TwoObjectiveProblem::new(
            BlackBoxObjective::from_fn(2, |_| 1.0),
            Box::new(Shifted { center: vec![0.0, 0.0] }),
        );
        let mut cfg = config(1000);
        cfg.early_stop = Some(EarlyStop { window: 10, tolerance: 1e-3 });
        let run = optimize(&p, &cfg, &pv(&[0.0, 0.0]), 1000, &mut RngHandle::new(1, 0)).unwrap();
        assert_eq!(run.termination, Termination::EarlyStopped { step: 20 });
    }

    #[test]
    fn plain_single_objective_equals_repeated_spsa_steps() {
        let make = || BlackBoxObjective::from_fn(3, |t| t.as_slice().iter().map(|x| x * x).sum());
        let gains = GainSchedule::for_iterations(40);
        let theta0 = pv(&[1.0, -2.0, 0.5]);
        let obj = make();
        let run = minimize_blackbox(
            &obj,
            &SingleObjectiveConfig::plain_spsa(gains),
            &theta0,
            40,
            &mut RngHandle::new(4, 0),
            &|t| t.l2_norm(),
        )
        .unwrap();
        let obj2 = make();
        let mut rng = RngHandle::new(4, 0);
        let mut theta = theta0;
        for k in 1..=40 {
            theta = spsa_step(&obj2, &theta, k, &gains, &mut rng).unwrap().0;
        }
        assert_eq!(run.theta, theta);
        assert_eq!(obj.calls(), 80);
        assert!(run.trajectory.iter().all(|r| r.indicator == 0.0));
    }

    #[test]
    fn threshold_search() {
        let rec = |loss: f64, calls: u64| StepRecord {
            step: calls,
            pair: ObjectivePair::new(loss, 0.0),
            active: ObjectiveIndex::BlackBox,
            indicator: 0.0,
            step_size: 0.1,
            cumulative_calls: calls,
            scalarized: loss,
            critical_set: vec![],
        };
        let t = vec![rec(5.0, 2), rec(1.0, 4), rec(0.4, 6), rec(0.2, 8)];
        assert_eq!(evaluations_to_threshold(&t, 0.5), Some(6));
        assert_eq!(evaluations_to_threshold(&t, 0.1), None);
    }
}
