//! Simultaneous perturbation gradient estimates with the standard Spall gain sequences.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{BlackBoxObjective, ObjectiveError};
use crate::vector::{sample_perturbation, ParamVector, PerturbationVector, RngHandle, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpsaError {
    #[error("step index must be at least 1")]
    InvalidStep,
    #[error("invalid gain schedule: {0}")]
    InvalidSchedule(String),
    #[error("non-finite gradient estimate at step {step}")]
    NonFiniteEstimate { step: u64 },
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

impl SpsaError {
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            SpsaError::Objective(ObjectiveError::BudgetExceeded { .. })
        )
    }
}

/// Gain sequences `a_k = a / (A + k)^alpha` and `c_k = c / k^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainSchedule {
    pub a: f64,
    pub c: f64,
    pub stability: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for GainSchedule {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.05,
            stability: 0.0,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

impl GainSchedule {
    /// Defaults with the stability offset set to 10% of the planned iterations.
    pub fn for_iterations(iterations: u64) -> Self {
        Self {
            stability: 0.1 * iterations as f64,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SpsaError> {
        let bad = |msg: &str| Err(SpsaError::InvalidSchedule(msg.to_string()));
        if !(self.a > 0.0 && self.a.is_finite()) {
            return bad("a must be positive");
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad("c must be positive");
        }
        if !(self.stability >= 0.0 && self.stability.is_finite()) {
            return bad("stability offset A must be nonnegative");
        }
        if !(self.alpha > 0.5 && self.alpha <= 1.0) {
            return bad("alpha must lie in (0.5, 1]");
        }
        if !(self.gamma > 0.0 && self.gamma <= 0.5) {
            return bad("gamma must lie in (0, 0.5]");
        }
        Ok(())
    }

    /// `(a_k, c_k)` for step `k >= 1`.
    pub fn gain_at(&self, k: u64) -> Result<(f64, f64), SpsaError> {
        if k == 0 {
            return Err(SpsaError::InvalidStep);
        }
        let k = k as f64;
        let a_k = self.a / (self.stability + k).powf(self.alpha);
        let c_k = self.c / k.powf(self.gamma);
        Ok((a_k, c_k))
    }
}

/// One two-sided SPSA gradient estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct SpsaEstimate {
    pub gradient: ParamVector,
    pub step: u64,
    pub plus_value: f64,
    pub minus_value: f64,
}

impl SpsaEstimate {
    /// `(f+ + f-) / 2`, a cheap estimate of the loss at the unperturbed point.
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.plus_value + self.minus_value)
    }
}

/// Estimates the gradient from `f(θ + cΔ)` and `f(θ - cΔ)` for a given perturbation.
///
/// Costs exactly two black-box calls.
pub fn estimate_with_perturbation(
    obj: &BlackBoxObjective,
    theta: &ParamVector,
    step: u64,
    c_k: f64,
    delta: &PerturbationVector,
) -> Result<SpsaEstimate, SpsaError> {
    let plus = delta.offset(theta, c_k)?;
    let minus = delta.offset(theta, -c_k)?;
    let plus_value = obj.evaluate(&plus)?;
    let minus_value = obj.evaluate(&minus)?;
    let diff = plus_value - minus_value;
    let values: Vec<f64> = delta.iter().map(|d| diff / (2.0 * c_k * d)).collect();
    if values.iter().any(|g| !g.is_finite()) {
        return Err(SpsaError::NonFiniteEstimate { step });
    }
    Ok(SpsaEstimate {
        gradient: ParamVector::new(values)?,
        step,
        plus_value,
        minus_value,
    })
}

/// Draws a fresh perturbation and estimates the gradient at step `k`.
pub fn estimate_gradient(
    obj: &BlackBoxObjective,
    theta: &ParamVector,
    k: u64,
    schedule: &GainSchedule,
    rng: &mut RngHandle,
) -> Result<SpsaEstimate, SpsaError> {
    let (_, c_k) = schedule.gain_at(k)?;
    let delta = sample_perturbation(rng, theta.dim())?;
    estimate_with_perturbation(obj, theta, k, c_k, &delta)
}

/// One plain SPSA update `θ - a_k ĝ_k`.
pub fn spsa_step(
    obj: &BlackBoxObjective,
    theta: &ParamVector,
    k: u64,
    schedule: &GainSchedule,
    rng: &mut RngHandle,
) -> Result<(ParamVector, SpsaEstimate), SpsaError> {
    let (a_k, _) = schedule.gain_at(k)?;
    let estimate = estimate_gradient(obj, theta, k, schedule, rng)?;
    let next = estimate.gradient.axpy(-a_k, theta)?;
    Ok((next, estimate))
}
