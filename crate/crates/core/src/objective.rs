//! The two-objective problem abstraction.
//!
//! The utility side is a [`BlackBoxObjective`]: it answers value queries and nothing
//! else, and it counts every query it serves. The privacy side implements
//! [`WhiteBoxObjective`], which exposes an exact gradient. Both are losses to minimize.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::{ParamVector, RngHandle, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObjectiveError {
    #[error("black-box budget exhausted after {calls_used} calls")]
    BudgetExceeded { calls_used: u64 },
    #[error("objective returned a non-finite value {0}")]
    NonFinite(f64),
    #[error("parameter dimension {actual} does not match problem dimension {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// A scalar function of the parameters that may only be queried for values.
pub trait ValueFn: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &ParamVector) -> f64;
}

impl<F> ValueFn for (usize, F)
where
    F: Fn(&ParamVector) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.0
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        (self.1)(theta)
    }
}

/// Maximum number of black-box queries an objective will serve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EvalBudget {
    #[default]
    Unlimited,
    Limited(u64),
}

impl EvalBudget {
    pub fn from_option(max: Option<u64>) -> Self {
        max.map_or(EvalBudget::Unlimited, EvalBudget::Limited)
    }

    fn permits(self, used: u64) -> bool {
        match self {
            EvalBudget::Unlimited => true,
            EvalBudget::Limited(max) => used < max,
        }
    }
}

/// A value-only objective with a linearizable evaluation counter.
///
/// There is no gradient channel. The counter is shared by clones, so a clone handed to
/// another thread still contributes to the same tally.
#[derive(Clone)]
pub struct BlackBoxObjective {
    inner: Arc<dyn ValueFn>,
    calls: Arc<AtomicU64>,
    budget: EvalBudget,
}

impl std::fmt::Debug for BlackBoxObjective {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BlackBoxObjective")
            .field("dim", &self.inner.dim())
            .field("calls", &self.calls())
            .field("budget", &self.budget)
            .finish()
    }
}

impl BlackBoxObjective {
    pub fn new(inner: impl ValueFn + 'static) -> Self {
        Self {
            inner: Arc::new(inner),
            calls: Arc::new(AtomicU64::new(0)),
            budget: EvalBudget::Unlimited,
        }
    }

    pub fn from_fn<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&ParamVector) -> f64 + Send + Sync + 'static,
    {
        Self::new((dim, f))
    }

    pub fn with_budget(mut self, budget: EvalBudget) -> Self {
        self.budget = budget;
        self
    }

    pub fn dim(&self) -> usize {
        self.inner.dim()
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn budget(&self) -> EvalBudget {
        self.budget
    }

    /// Evaluates the objective, consuming one call from the budget.
    pub fn evaluate(&self, theta: &ParamVector) -> Result<f64, ObjectiveError> {
        if theta.dim() != self.dim() {
            return Err(ObjectiveError::Dimension {
                expected: self.dim(),
                actual: theta.dim(),
            });
        }
        let budget = self.budget;
        self.calls
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |used| {
                budget.permits(used).then_some(used + 1)
            })
            .map_err(|used| ObjectiveError::BudgetExceeded { calls_used: used })?;
        let value = self.inner.value(theta);
        if !value.is_finite() {
            return Err(ObjectiveError::NonFinite(value));
        }
        Ok(value)
    }

    /// Wraps the objective with additive zero-mean Gaussian noise.
    ///
    /// The wrapped objective starts with a fresh counter and keeps the inner budget.
    pub fn make_noisy(self, noise_scale: f64, rng: RngHandle) -> BlackBoxObjective {
        assert!(
            noise_scale >= 0.0 && noise_scale.is_finite(),
            "noise scale must be a finite nonnegative number"
        );
        let budget = self.budget;
        BlackBoxObjective::new(NoisyFn {
            inner: self.inner,
            scale: noise_scale,
            rng: Mutex::new(rng),
        })
        .with_budget(budget)
    }
}

struct NoisyFn {
    inner: Arc<dyn ValueFn>,
    scale: f64,
    rng: Mutex<RngHandle>,
}

impl ValueFn for NoisyFn {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        let base = self.inner.value(theta);
        if self.scale == 0.0 {
            return base;
        }
        let z = self
            .rng
            .lock()
            .expect("noise rng poisoned")
            .standard_normal();
        base + self.scale * z
    }
}

/// A differentiable objective with an exact gradient.
pub trait WhiteBoxObjective: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &ParamVector) -> f64;
    fn gradient(&self, theta: &ParamVector) -> ParamVector;
}

/// Joint losses at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectivePair {
    pub blackbox: f64,
    pub whitebox: f64,
}

impl ObjectivePair {
    pub fn new(blackbox: f64, whitebox: f64) -> Self {
        Self { blackbox, whitebox }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.blackbox, self.whitebox]
    }

    pub fn get(&self, index: ObjectiveIndex) -> f64 {
        match index {
            ObjectiveIndex::BlackBox => self.blackbox,
            ObjectiveIndex::WhiteBox => self.whitebox,
        }
    }
}

/// Which of the two objectives; serialized as 1 (black-box) or 2 (white-box).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveIndex {
    BlackBox,
    WhiteBox,
}

impl ObjectiveIndex {
    pub fn number(self) -> u8 {
        match self {
            ObjectiveIndex::BlackBox => 1,
            ObjectiveIndex::WhiteBox => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(ObjectiveIndex::BlackBox),
            2 => Some(ObjectiveIndex::WhiteBox),
            _ => None,
        }
    }
}

impl Serialize for ObjectiveIndex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for ObjectiveIndex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let n = u8::deserialize(deserializer)?;
        ObjectiveIndex::from_number(n)
            .ok_or_else(|| serde::de::Error::custom(format!("active index must be 1 or 2, got {n}")))
    }
}

/// A black-box utility loss paired with a white-box privacy loss.
pub struct TwoObjectiveProblem {
    pub blackbox: BlackBoxObjective,
    pub whitebox: Box<dyn WhiteBoxObjective>,
}

impl std::fmt::Debug for TwoObjectiveProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TwoObjectiveProblem")
            .field("blackbox", &self.blackbox)
            .field("whitebox_dim", &self.whitebox.dim())
            .finish()
    }
}

impl TwoObjectiveProblem {
    pub fn new(blackbox: BlackBoxObjective, whitebox: Box<dyn WhiteBoxObjective>) -> Self {
        assert_eq!(
            blackbox.dim(),
            whitebox.dim(),
            "both objectives must share a parameter dimension"
        );
        Self { blackbox, whitebox }
    }

    pub fn dim(&self) -> usize {
        self.blackbox.dim()
    }

    /// Evaluates both losses; costs one black-box call.
    pub fn evaluate_pair(&self, theta: &ParamVector) -> Result<ObjectivePair, ObjectiveError> {
        let blackbox = self.blackbox.evaluate(theta)?;
        let whitebox = self.whitebox_value(theta)?;
        Ok(ObjectivePair { blackbox, whitebox })
    }

    pub fn whitebox_value(&self, theta: &ParamVector) -> Result<f64, ObjectiveError> {
        self.check_dim(theta)?;
        let value = self.whitebox.value(theta);
        if !value.is_finite() {
            return Err(ObjectiveError::NonFinite(value));
        }
        Ok(value)
    }

    /// Analytic gradient of the white-box loss. Never touches the black-box counter.
    pub fn whitebox_gradient(&self, theta: &ParamVector) -> Result<ParamVector, ObjectiveError> {
        self.check_dim(theta)?;
        Ok(self.whitebox.gradient(theta))
    }

    fn check_dim(&self, theta: &ParamVector) -> Result<(), ObjectiveError> {
        if theta.dim() != self.dim() {
            return Err(ObjectiveError::Dimension {
                expected: self.dim(),
                actual: theta.dim(),
            });
        }
        Ok(())
    }
}

/// Central finite-difference gradient, used to check analytic gradients.
pub fn finite_difference_gradient(
    f: impl Fn(&ParamVector) -> f64,
    theta: &ParamVector,
    step: f64,
) -> Vec<f64> {
    let base = theta.as_slice();
    (0..base.len())
        .map(|i| {
            let mut plus = base.to_vec();
            let mut minus = base.to_vec();
            plus[i] += step;
            minus[i] -= step;
            let fp = f(&ParamVector::new(plus).expect("finite probe"));
            let fm = f(&ParamVector::new(minus).expect("finite probe"));
            (fp - fm) / (2.0 * step)
        })
        .collect()
}

/// Largest per-coordinate relative error between an analytic and a numeric gradient.
///
/// The denominator is floored at 1 so coordinates with a vanishing gradient are compared
/// in absolute terms.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(1.0))
        .fold(0.0, f64::max)
}
