//! Critical-history gradient store, direction blending and the status indicator.
//!
//! The store keeps at most `m` past SPSA estimates. Each record remembers its step index
//! and the norm it had at insertion; its importance at step `k` is
//! `d^(k - t) * ||ĝ_t||`. A new estimate replaces the least important record only when
//! its own norm beats that record's decayed score.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::vector::{ParamVector, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HistoryError {
    #[error("step {step} precedes stored step {stored}")]
    StepOrder { step: u64, stored: u64 },
    #[error("step {0} is already stored")]
    DuplicateStep(u64),
    #[error("invalid history configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// Tuning knobs for the critical-history scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HistoryConfig {
    /// Store capacity `m`.
    pub capacity: usize,
    /// Per-step importance decay `d` in (0, 1].
    pub decay: f64,
    /// Weight of the current estimate in the blend, in (0, 1).
    pub blend_gamma: f64,
    /// Indicator magnitude factor `b` in (0, 2).
    pub magnitude: f64,
}

impl Default for HistoryConfig {
    fn default() -> Self {
        Self {
            capacity: 5,
            decay: 0.9,
            blend_gamma: 0.6,
            magnitude: 1.0,
        }
    }
}

impl HistoryConfig {
    pub fn validate(&self) -> Result<(), HistoryError> {
        if self.capacity == 0 {
            return Err(HistoryError::Config("capacity must be positive".into()));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(HistoryError::Config("decay must lie in (0, 1]".into()));
        }
        check_blend_gamma(self.blend_gamma)?;
        check_magnitude(self.magnitude)?;
        Ok(())
    }
}

fn check_blend_gamma(gamma: f64) -> Result<(), HistoryError> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(HistoryError::Config(format!(
            "blend gamma must lie in (0, 1), got {gamma}"
        )))
    }
}

fn check_magnitude(b: f64) -> Result<(), HistoryError> {
    if b > 0.0 && b < 2.0 {
        Ok(())
    } else {
        Err(HistoryError::Config(format!(
            "indicator magnitude b must lie in (0, 2), got {b}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub gradient: ParamVector,
    pub step: u64,
    pub base_norm: f64,
}

impl GradientRecord {
    pub fn new(gradient: ParamVector, step: u64) -> Self {
        let base_norm = gradient.l2_norm();
        Self {
            gradient,
            step,
            base_norm,
        }
    }
}

/// Decayed importance of `record` at `current_step`.
pub fn score(record: &GradientRecord, current_step: u64, decay: f64) -> Result<f64, HistoryError> {
    if current_step < record.step {
        return Err(HistoryError::StepOrder {
            step: current_step,
            stored: record.step,
        });
    }
    let age = current_step - record.step;
    let factor = match i32::try_from(age) {
        Ok(age) => decay.powi(age),
        Err(_) => decay.powf(age as f64),
    };
    Ok(factor * record.base_norm)
}

/// How a full store chooses what to drop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Selection {
    /// Importance-based replacement.
    #[default]
    Critical,
    /// Keep the latest `m` estimates regardless of importance.
    Fifo,
}

/// `(step, insertion norm)` of one stored record, for trajectory logs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecordSummary {
    pub step: u64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalGradientSet {
    records: Vec<GradientRecord>,
    capacity: usize,
    decay: f64,
    selection: Selection,
}

impl CriticalGradientSet {
    pub fn new(capacity: usize, decay: f64) -> Result<Self, HistoryError> {
        Self::with_selection(capacity, decay, Selection::Critical)
    }

    pub fn with_selection(
        capacity: usize,
        decay: f64,
        selection: Selection,
    ) -> Result<Self, HistoryError> {
        if capacity == 0 {
            return Err(HistoryError::Config("capacity must be positive".into()));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(HistoryError::Config("decay must lie in (0, 1]".into()));
        }
        Ok(Self {
            records: Vec::with_capacity(capacity),
            capacity,
            decay,
            selection,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn records(&self) -> &[GradientRecord] {
        &self.records
    }

    pub fn summary(&self) -> Vec<RecordSummary> {
        self.records
            .iter()
            .map(|r| RecordSummary {
                step: r.step,
                norm: r.base_norm,
            })
            .collect()
    }

    /// Offers the estimate from step `step` to the store. Returns whether it was kept.
    pub fn maybe_insert(&mut self, gradient: ParamVector, step: u64) -> Result<bool, HistoryError> {
        for r in &self.records {
            if r.step == step {
                return Err(HistoryError::DuplicateStep(step));
            }
            if r.step > step {
                return Err(HistoryError::StepOrder {
                    step,
                    stored: r.step,
                });
            }
        }
        if let Some(first) = self.records.first() {
            if first.gradient.dim() != gradient.dim() {
                return Err(VectorError::DimensionMismatch {
                    left: first.gradient.dim(),
                    right: gradient.dim(),
                }
                .into());
            }
        }
        let candidate = GradientRecord::new(gradient, step);
        if self.records.len() < self.capacity {
            self.records.push(candidate);
            return Ok(true);
        }
        let victim = match self.selection {
            Selection::Fifo => Some(self.oldest_index()),
            Selection::Critical => {
                let (index, min_score) = self.min_score(step)?;
                (candidate.base_norm > min_score).then_some(index)
            }
        };
        match victim {
            Some(index) => {
                self.records[index] = candidate;
                Ok(true)
            }
            None => Ok(false),
        }
    }

    fn oldest_index(&self) -> usize {
        self.records
            .iter()
            .enumerate()
            .min_by_key(|(_, r)| r.step)
            .map(|(i, _)| i)
            .expect("full store is non-empty")
    }

    /// Index and value of the smallest decayed score; ties go to the oldest record.
    fn min_score(&self, step: u64) -> Result<(usize, f64), HistoryError> {
        let mut best: Option<(usize, f64, u64)> = None;
        for (i, r) in self.records.iter().enumerate() {
            let s = score(r, step, self.decay)?;
            let better = match best {
                None => true,
                Some((_, bs, bstep)) => s < bs || (s == bs && r.step < bstep),
            };
            if better {
                best = Some((i, s, r.step));
            }
        }
        let (i, s, _) = best.expect("full store is non-empty");
        Ok((i, s))
    }

    /// Arithmetic mean of the stored gradients, or `None` when empty.
    pub fn mean(&self) -> Result<Option<ParamVector>, HistoryError> {
        let Some(first) = self.records.first() else {
            return Ok(None);
        };
        let mut sum = ParamVector::zeros(first.gradient.dim())?;
        for r in &self.records {
            sum = r.gradient.axpy(1.0, &sum)?;
        }
        Ok(Some(sum.scale(1.0 / self.records.len() as f64)?))
    }
}

/// Enhanced gradient `γ ĝ + (1 - γ) mean(C_g)`; the estimate itself when the store is empty.
///
/// The mean divides by the number of stored records, not by the capacity.
pub fn blend(
    set: &CriticalGradientSet,
    current: &ParamVector,
    blend_gamma: f64,
) -> Result<ParamVector, HistoryError> {
    check_blend_gamma(blend_gamma)?;
    match set.mean()? {
        None => Ok(current.clone()),
        Some(mean) => Ok(current.axpy(blend_gamma, &mean.scale(1.0 - blend_gamma)?)?),
    }
}

/// Optimization status `I_k = (b / π) · arctan(2π cos φ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatusIndicator {
    pub value: f64,
    pub magnitude: f64,
}

impl StatusIndicator {
    pub fn neutral(magnitude: f64) -> Self {
        Self {
            value: 0.0,
            magnitude,
        }
    }

    pub fn from_cosine(cos_phi: f64, magnitude: f64) -> Result<Self, HistoryError> {
        check_magnitude(magnitude)?;
        Ok(Self {
            value: magnitude / PI * (2.0 * PI * cos_phi).atan(),
            magnitude,
        })
    }
}

/// Indicator for the angle between the raw and enhanced gradients; neutral when either is zero.
pub fn status_indicator(
    g_hat: &ParamVector,
    g_tilde: &ParamVector,
    magnitude: f64,
) -> Result<StatusIndicator, HistoryError> {
    check_magnitude(magnitude)?;
    match g_hat.cosine(g_tilde)? {
        Some(cos) => StatusIndicator::from_cosine(cos, magnitude),
        None => Ok(StatusIndicator::neutral(magnitude)),
    }
}

/// `(1 + I_k) a_k`.
pub fn adjusted_step(a_k: f64, indicator: StatusIndicator) -> f64 {
    (1.0 + indicator.value) * a_k
}
