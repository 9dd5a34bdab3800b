//! Scalarizations of an [`ObjectivePair`] and the matching update directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::{ObjectiveIndex, ObjectivePair};
use crate::vector::{ParamVector, VectorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScalarizeError {
    #[error("invalid scalarization config: {0}")]
    Config(String),
    #[error(transparent)]
    Vector(#[from] VectorError),
}

/// How the ideal point is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IdealMode {
    /// Use the configured `ideal` values as given.
    #[default]
    Fixed,
    /// Replace each ideal coordinate by the running minimum of the observed losses.
    Tracking,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarizationConfig {
    /// Weights `(λ₁, λ₂)` for the black-box and white-box losses.
    pub lambda: [f64; 2],
    /// Ideal point `z*`.
    pub ideal: [f64; 2],
    pub epsilon: f64,
    pub sigma: f64,
    #[serde(default)]
    pub ideal_mode: IdealMode,
}

impl Default for ScalarizationConfig {
    fn default() -> Self {
        Self {
            lambda: [0.5, 0.5],
            ideal: [0.0, 0.0],
            epsilon: 0.01,
            sigma: 0.001,
            ideal_mode: IdealMode::Fixed,
        }
    }
}

impl ScalarizationConfig {
    pub fn with_lambda(lambda: [f64; 2]) -> Self {
        Self {
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), ScalarizeError> {
        let [l1, l2] = self.lambda;
        if !(l1 > 0.0 && l2 > 0.0 && l1.is_finite() && l2.is_finite()) {
            return Err(ScalarizeError::Config(format!(
                "both weights must be strictly positive, got ({l1}, {l2})"
            )));
        }
        if !self.ideal.iter().all(|z| z.is_finite()) {
            return Err(ScalarizeError::Config("ideal point must be finite".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ScalarizeError::Config("epsilon must be positive".into()));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ScalarizeError::Config("sigma must be positive".into()));
        }
        Ok(())
    }

    /// Same config with the weights rescaled to sum to one.
    pub fn normalized(&self) -> Result<Self, ScalarizeError> {
        self.validate()?;
        let total = self.lambda[0] + self.lambda[1];
        Ok(Self {
            lambda: [self.lambda[0] / total, self.lambda[1] / total],
            ..*self
        })
    }
}

/// Which scalarized objective drives the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scalarization {
    WeightedSum,
    Tchebycheff,
    #[default]
    AugmentedTchebycheff,
}

impl Scalarization {
    pub fn value(self, pair: &ObjectivePair, config: &ScalarizationConfig) -> f64 {
        match self {
            Scalarization::WeightedSum => weighted_sum(pair, config),
            Scalarization::Tchebycheff => tchebycheff(pair, config).0,
            Scalarization::AugmentedTchebycheff => augmented_tchebycheff(pair, config).0,
        }
    }
}

/// `λ₁ L₁ + λ₂ L₂`.
pub fn weighted_sum(pair: &ObjectivePair, config: &ScalarizationConfig) -> f64 {
    config.lambda[0] * pair.blackbox + config.lambda[1] * pair.whitebox
}

/// `max_i λ_i (L_i - (z_i* - ε))` and the index attaining it; ties go to the black-box term.
pub fn tchebycheff(pair: &ObjectivePair, config: &ScalarizationConfig) -> (f64, ObjectiveIndex) {
    let first = config.lambda[0] * (pair.blackbox - (config.ideal[0] - config.epsilon));
    let second = config.lambda[1] * (pair.whitebox - (config.ideal[1] - config.epsilon));
    if second > first {
        (second, ObjectiveIndex::WhiteBox)
    } else {
        (first, ObjectiveIndex::BlackBox)
    }
}

/// Tchebycheff term plus `σ` times the weighted sum.
pub fn augmented_tchebycheff(
    pair: &ObjectivePair,
    config: &ScalarizationConfig,
) -> (f64, ObjectiveIndex) {
    let (value, index) = tchebycheff(pair, config);
    (value + config.sigma * weighted_sum(pair, config), index)
}

/// Update direction for the augmented Tchebycheff objective.
///
/// With `u = λ₁(1 + I)g̃` and `g = u + λ₂h`, returns `u + σg` when the black-box term is
/// active and `λ₂h + σg` otherwise. `sigma` is taken as a parameter so the σ = 0 limit can
/// be exercised directly.
pub fn combined_gradient(
    g_tilde: &ParamVector,
    h: &ParamVector,
    indicator: f64,
    active: ObjectiveIndex,
    lambda: [f64; 2],
    sigma: f64,
) -> Result<ParamVector, ScalarizeError> {
    let u = g_tilde.scale(lambda[0] * (1.0 + indicator))?;
    let g = h.axpy(lambda[1], &u)?;
    let leading = match active {
        ObjectiveIndex::BlackBox => u,
        ObjectiveIndex::WhiteBox => h.scale(lambda[1])?,
    };
    Ok(g.axpy(sigma, &leading)?)
}

/// Update direction of the weighted sum: `λ₁(1 + I)g̃ + λ₂h`.
pub fn weighted_sum_gradient(
    g_tilde: &ParamVector,
    h: &ParamVector,
    indicator: f64,
    lambda: [f64; 2],
) -> Result<ParamVector, ScalarizeError> {
    Ok(g_tilde.axpy(lambda[0] * (1.0 + indicator), &h.scale(lambda[1])?)?)
}

/// Update direction of the plain Tchebycheff objective: only the active term's gradient.
pub fn tchebycheff_gradient(
    g_tilde: &ParamVector,
    h: &ParamVector,
    indicator: f64,
    active: ObjectiveIndex,
    lambda: [f64; 2],
) -> Result<ParamVector, ScalarizeError> {
    if g_tilde.dim() != h.dim() {
        return Err(VectorError::DimensionMismatch {
            left: g_tilde.dim(),
            right: h.dim(),
        }
        .into());
    }
    Ok(match active {
        ObjectiveIndex::BlackBox => g_tilde.scale(lambda[0] * (1.0 + indicator))?,
        ObjectiveIndex::WhiteBox => h.scale(lambda[1])?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    fn cfg(lambda: [f64; 2]) -> ScalarizationConfig {
        ScalarizationConfig {
            lambda,
            ideal: [0.0, 0.0],
            epsilon: 0.1,
            sigma: 0.01,
            ideal_mode: IdealMode::Fixed,
        }
    }

    #[test]
    fn weighted_sum_examples() {
        let c = cfg([0.5, 0.5]);
        assert_eq!(weighted_sum(&ObjectivePair::new(2.0, 4.0), &c), 3.0);
        assert_eq!(weighted_sum(&ObjectivePair::new(0.0, 0.0), &cfg([0.3, 0.7])), 0.0);
        assert!(cfg([1.0, 0.0]).validate().is_err());
        assert!(cfg([0.0, 1.0]).validate().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScalarizationConfig::default().validate().is_ok());
        let c = ScalarizationConfig { epsilon: 0.0, ..ScalarizationConfig::default() };
        assert!(c.validate().is_err());
        let c = ScalarizationConfig { sigma: -1.0, ..ScalarizationConfig::default() };
        assert!(c.validate().is_err());
        let n = ScalarizationConfig::with_lambda([2.0, 6.0]).normalized().unwrap();
        assert_eq!(n.lambda, [0.25, 0.75]);
    }

    #[test]
    fn tchebycheff_examples() {
        let pair = ObjectivePair::new(2.0, 4.0);
        let (v, i) = tchebycheff(&pair, &cfg([0.5, 0.5]));
        assert!((v - 2.05).abs() < 1e-12);
        assert_eq!(i, ObjectiveIndex::WhiteBox);

        let (v, i) = tchebycheff(&ObjectivePair::new(-0.1, -0.1), &cfg([0.5, 0.5]));
        assert_eq!(v, 0.0);
        assert_eq!(i, ObjectiveIndex::BlackBox);

        let (v, i) = tchebycheff(&pair, &cfg([0.9, 0.1]));
        assert!((v - 1.89).abs() < 1e-12);
        assert_eq!(i, ObjectiveIndex::BlackBox);
    }

    #[test]
    fn augmented_examples() {
        let pair = ObjectivePair::new(2.0, 4.0);
        let (v, i) = augmented_tchebycheff(&pair, &cfg([0.5, 0.5]));
        assert!((v - 2.08).abs() < 1e-12);
        assert_eq!(i, ObjectiveIndex::WhiteBox);

        let c = cfg([0.3, 0.7]);
        let (v, _) = augmented_tchebycheff(&ObjectivePair::new(0.0, 0.0), &c);
        assert!((v - 0.1 * 0.7).abs() < 1e-15);
    }

    #[test]
    fn combined_gradient_examples() {
        let g = pv(&[1.0, 0.0]);
        let h = pv(&[0.0, 1.0]);
        let out = combined_gradient(&g, &h, 0.0, ObjectiveIndex::BlackBox, [0.5, 0.5], 0.01)
            .unwrap();
        assert!((out.as_slice()[0] - 0.505).abs() < 1e-15);
        assert!((out.as_slice()[1] - 0.005).abs() < 1e-15);
        let out = combined_gradient(&g, &h, 0.0, ObjectiveIndex::WhiteBox, [0.5, 0.5], 0.01)
            .unwrap();
        assert!((out.as_slice()[0] - 0.005).abs() < 1e-15);
        assert!((out.as_slice()[1] - 0.505).abs() < 1e-15);

        let i_k = 0.3;
        let out = combined_gradient(&g, &h, i_k, ObjectiveIndex::BlackBox, [0.5, 0.5], 0.0)
            .unwrap();
        assert_eq!(out, g.scale(0.5 * 1.3).unwrap());
        assert!(combined_gradient(&g, &pv(&[1.0]), 0.0, ObjectiveIndex::BlackBox, [0.5, 0.5], 0.01).is_err());
    }

    #[test]
    fn tchebycheff_gradient_picks_active_term() {
        let g = pv(&[1.0, 2.0]);
        let h = pv(&[-3.0, 4.0]);
        let out = tchebycheff_gradient(&g, &h, 0.5, ObjectiveIndex::BlackBox, [0.4, 0.6]).unwrap();
        for (o, e) in out.as_slice().iter().zip([0.6, 1.2]) {
            assert!((o - e).abs() < 1e-15);
        }
        assert_eq!(
            tchebycheff_gradient(&g, &h, 0.5, ObjectiveIndex::WhiteBox, [0.4, 0.6]).unwrap(),
            h.scale(0.6).unwrap()
        );
    }

    fn arb_config() -> impl Strategy<Value = ScalarizationConfig> {
        (0.01f64..1.0, -2.0f64..2.0, -2.0f64..2.0, 1e-4f64..0.5, 1e-5f64..0.1).prop_map(
            |(l1, z1, z2, eps, sigma)| ScalarizationConfig {
                lambda: [l1, 1.0 - l1 + 1e-3],
                ideal: [z1, z2],
                epsilon: eps,
                sigma,
                ideal_mode: IdealMode::Fixed,
            },
        )
    }

    proptest! {
        #[test]
        fn augmentation_is_sigma_times_weighted_sum(
            c in arb_config(), a in -10.0f64..10.0, b in -10.0f64..10.0,
        ) {
            let pair = ObjectivePair::new(a, b);
            let diff = augmented_tchebycheff(&pair, &c).0 - tchebycheff(&pair, &c).0;
            let expected = c.sigma * weighted_sum(&pair, &c);
            prop_assert!((diff - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            prop_assert_eq!(augmented_tchebycheff(&pair, &c).1, tchebycheff(&pair, &c).1);
        }

        #[test]
        fn tchebycheff_dominates_each_term(
            c in arb_config(), a in -10.0f64..10.0, b in -10.0f64..10.0,
        ) {
            let pair = ObjectivePair::new(a, b);
            let (v, _) = tchebycheff(&pair, &c);
            prop_assert!(v >= c.lambda[0] * (a - c.ideal[0] + c.epsilon) - 1e-12);
            prop_assert!(v >= c.lambda[1] * (b - c.ideal[1] + c.epsilon) - 1e-12);
        }

        #[test]
        fn combined_gradient_is_linear(
            g1 in prop::collection::vec(-5.0f64..5.0, 3),
            g2 in prop::collection::vec(-5.0f64..5.0, 3),
            h1 in prop::collection::vec(-5.0f64..5.0, 3),
            h2 in prop::collection::vec(-5.0f64..5.0, 3),
            s in -3.0f64..3.0,
            i_k in -0.49f64..0.49,
            active in prop::bool::ANY,
        ) {
            let active = if active { ObjectiveIndex::BlackBox } else { ObjectiveIndex::WhiteBox };
            let lambda = [0.3, 0.7];
            let sigma = 0.01;
            let f = |g: &ParamVector, h: &ParamVector| {
                combined_gradient(g, h, i_k, active, lambda, sigma).unwrap()
            };
            let (g1, g2, h1, h2) = (pv(&g1), pv(&g2), pv(&h1), pv(&h2));
            // affine in g̃ at fixed h, and in h at fixed g̃: f(s·x + y) − f(y) = s·(f(x) − f(0))
            let zero = ParamVector::zeros(3).unwrap();
            let checks = [
                (f(&g1.axpy(s, &g2).unwrap(), &h1), f(&g2, &h1), f(&g1, &h1), f(&zero, &h1)),
                (f(&g1, &h1.axpy(s, &h2).unwrap()), f(&g1, &h2), f(&g1, &h1), f(&g1, &zero)),
            ];
            for (mixed, base, x, origin) in checks {
                for i in 0..3 {
                    let l = mixed.as_slice()[i] - base.as_slice()[i];
                    let r = s * (x.as_slice()[i] - origin.as_slice()[i]);
                    prop_assert!((l - r).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn scaling_objectives_and_ideal_keeps_active_index(
            c in arb_config(), a in -10.0f64..10.0, b in -10.0f64..10.0, k in 0.01f64..100.0,
        ) {
            let pair = ObjectivePair::new(a, b);
            let scaled = ScalarizationConfig {
                ideal: [c.ideal[0] * k, c.ideal[1] * k],
                epsilon: c.epsilon * k,
                ..c
            };
            let (v, i) = tchebycheff(&pair, &c);
            let (vs, is) = tchebycheff(&ObjectivePair::new(a * k, b * k), &scaled);
            let t1 = c.lambda[0] * (a - c.ideal[0] + c.epsilon);
            let t2 = c.lambda[1] * (b - c.ideal[1] + c.epsilon);
            prop_assume!((t1 - t2).abs() > 1e-9 * (1.0 + t1.abs()));
            prop_assert_eq!(i, is);
            prop_assert!((vs - k * v).abs() <= 1e-9 * (1.0 + (k * v).abs()));
        }
    }
}
