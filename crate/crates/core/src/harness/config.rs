//! Experiment configuration files.
//!
//! A config is a TOML document. Only `problem`, `algorithm` and `iterations` are
//! required; everything else has a default. Unknown keys are rejected.
//!
//! ```toml
//! algorithm = "ours"
//! iterations = 1000
//! seeds = [1, 2, 3]
//! noise = 0.05
//!
//! [problem]
//! name = "noisy-sphere"
//! dim = 50
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::history::HistoryConfig;
use crate::objective::EvalBudget;
use crate::optimizer::{Components, EarlyStop};
use crate::problems::{AnonymizerSpec, EsConfig};
use crate::scalarize::{IdealMode, Scalarization, ScalarizationConfig};
use crate::spsa::GainSchedule;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("invalid `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Invalid {
        key: String,
        line: Option<usize>,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Ours,
    OursWeightedSum,
    OursTchebycheffOnly,
    SpsaPlain,
    EsBaseline,
}

/// Switches off one component of the critical-history scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    NoHistory,
    NoCriticalCollection,
    NoDirectionAdjust,
    NoStepsizeAdjust,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::NoHistory,
        Ablation::NoCriticalCollection,
        Ablation::NoDirectionAdjust,
        Ablation::NoStepsizeAdjust,
    ];

    pub fn apply(self, c: Components) -> Components {
        match self {
            Ablation::NoHistory => Components { history: false, ..c },
            Ablation::NoCriticalCollection => Components {
                critical_selection: false,
                ..c
            },
            Ablation::NoDirectionAdjust => Components {
                direction_adjust: false,
                ..c
            },
            Ablation::NoStepsizeAdjust => Components {
                stepsize_adjust: false,
                ..c
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwoQuadraticSpec {
    pub dim: usize,
    /// Center of the black-box loss; defaults to `e₁`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<Vec<f64>>,
    /// Center of the white-box loss; defaults to `−e₁`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<Vec<f64>>,
}

impl Default for TwoQuadraticSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            c1: None,
            c2: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcaveFrontSpec {
    pub dim: usize,
}

impl Default for ConcaveFrontSpec {
    fn default() -> Self {
        Self { dim: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyAnonymizerSpec {
    pub samples: usize,
    pub features: usize,
    pub init_noise: f64,
    /// Seed of the synthetic dataset, shared by all replicate runs.
    pub data_seed: u64,
}

impl Default for ToyAnonymizerSpec {
    fn default() -> Self {
        let base = AnonymizerSpec::default();
        Self {
            samples: base.samples,
            features: base.features,
            init_noise: base.init_noise,
            data_seed: 0,
        }
    }
}

impl ToyAnonymizerSpec {
    pub fn anonymizer_spec(&self) -> AnonymizerSpec {
        AnonymizerSpec {
            samples: self.samples,
            features: self.features,
            init_noise: self.init_noise,
            ..AnonymizerSpec::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoisySphereSpec {
    pub dim: usize,
}

impl Default for NoisySphereSpec {
    fn default() -> Self {
        Self { dim: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum ProblemSpec {
    TwoQuadratic(TwoQuadraticSpec),
    ConcaveFront(ConcaveFrontSpec),
    ToyAnonymizer(ToyAnonymizerSpec),
    NoisySphere(NoisySphereSpec),
}

impl ProblemSpec {
    pub fn dim(&self) -> usize {
        match self {
            ProblemSpec::TwoQuadratic(s) => s.dim,
            ProblemSpec::ConcaveFront(s) => s.dim,
            ProblemSpec::ToyAnonymizer(s) => s.features * s.features + s.features,
            ProblemSpec::NoisySphere(s) => s.dim,
        }
    }

    pub fn is_two_objective(&self) -> bool {
        !matches!(self, ProblemSpec::NoisySphere(_))
    }

    /// Ideal point used when the config does not give one.
    pub fn default_ideal(&self) -> [f64; 2] {
        match self {
            // the reviewer cannot do worse than chance without being actively misled
            ProblemSpec::ToyAnonymizer(_) => [0.0, -std::f64::consts::LN_2],
            _ => [0.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalarizationSection {
    pub lambda: [f64; 2],
    /// Defaults to the problem's natural ideal point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ideal: Option<[f64; 2]>,
    pub epsilon: f64,
    pub sigma: f64,
    pub ideal_mode: IdealMode,
}

impl Default for ScalarizationSection {
    fn default() -> Self {
        let base = ScalarizationConfig::default();
        Self {
            lambda: base.lambda,
            ideal: None,
            epsilon: base.epsilon,
            sigma: base.sigma,
            ideal_mode: base.ideal_mode,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GainsSection {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Stability offset `A`; defaults to 10% of `iterations`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stability: Option<f64>,
}

impl Default for GainsSection {
    fn default() -> Self {
        let base = GainSchedule::default();
        Self {
            a: base.a,
            c: base.c,
            alpha: base.alpha,
            gamma: base.gamma,
            stability: None,
        }
    }
}

fn default_seeds() -> Vec<u64> {
    vec![1]
}

fn default_threshold() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub ablations: Vec<Ablation>,
    pub iterations: u64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Maximum black-box calls per seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    /// Standard deviation of Gaussian noise added to every black-box answer.
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub reuse_midpoint: bool,
    /// Evaluations-to-threshold counts calls until the loss falls to this fraction of its
    /// initial value.
    #[serde(default = "default_threshold")]
    pub threshold_fraction: f64,
    /// Starting point; defaults to a problem-specific start.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<Vec<f64>>,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub scalarization: ScalarizationSection,
    #[serde(default)]
    pub gains: GainsSection,
    #[serde(default)]
    pub history: HistoryConfig,
    #[serde(default)]
    pub es: EsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<EarlyStop>,
}

impl ExperimentConfig {
    /// A config with every optional setting at its default.
    pub fn new(problem: ProblemSpec, algorithm: Algorithm, iterations: u64) -> Self {
        Self {
            algorithm,
            ablations: Vec::new(),
            iterations,
            seeds: default_seeds(),
            budget: None,
            noise: 0.0,
            reuse_midpoint: false,
            threshold_fraction: default_threshold(),
            theta0: None,
            problem,
            scalarization: ScalarizationSection::default(),
            gains: GainsSection::default(),
            history: HistoryConfig::default(),
            es: EsConfig::default(),
            early_stop: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate().map_err(|e| match e {
            ConfigError::Invalid { key, message, .. } => ConfigError::Invalid {
                line: line_of(text, &key),
                key,
                message,
            },
            other => other,
        })?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn scalarization_config(&self) -> ScalarizationConfig {
        let s = &self.scalarization;
        ScalarizationConfig {
            lambda: s.lambda,
            ideal: s.ideal.unwrap_or_else(|| self.problem.default_ideal()),
            epsilon: s.epsilon,
            sigma: s.sigma,
            ideal_mode: s.ideal_mode,
        }
    }

    pub fn gain_schedule(&self) -> GainSchedule {
        let g = &self.gains;
        GainSchedule {
            a: g.a,
            c: g.c,
            stability: g.stability.unwrap_or(0.1 * self.iterations as f64),
            alpha: g.alpha,
            gamma: g.gamma,
        }
    }

    pub fn components(&self) -> Components {
        match self.algorithm {
            Algorithm::SpsaPlain => Components::none(),
            _ => self
                .ablations
                .iter()
                .fold(Components::full(), |c, a| a.apply(c)),
        }
    }

    pub fn objective(&self) -> Scalarization {
        match self.algorithm {
            Algorithm::OursWeightedSum => Scalarization::WeightedSum,
            Algorithm::OursTchebycheffOnly => Scalarization::Tchebycheff,
            _ => Scalarization::AugmentedTchebycheff,
        }
    }

    pub fn eval_budget(&self) -> EvalBudget {
        EvalBudget::from_option(self.budget)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, message: String| {
            Err(ConfigError::Invalid {
                key: key.to_string(),
                line: None,
                message,
            })
        };
        if !self.ablations.is_empty() && self.algorithm != Algorithm::Ours {
            return invalid(
                "ablations",
                "ablation flags are only valid with algorithm \"ours\"".into(),
            );
        }
        for (i, a) in self.ablations.iter().enumerate() {
            if self.ablations[..i].contains(a) {
                return invalid("ablations", format!("{a:?} is listed twice"));
            }
        }
        let two = self.problem.is_two_objective();
        match self.algorithm {
            Algorithm::EsBaseline if two => {
                return invalid(
                    "algorithm",
                    "es-baseline needs a single-objective problem".into(),
                )
            }
            Algorithm::OursWeightedSum | Algorithm::OursTchebycheffOnly if !two => {
                return invalid(
                    "algorithm",
                    "scalarization variants need a two-objective problem".into(),
                )
            }
            _ => {}
        }
        if self.seeds.is_empty() {
            return invalid("seeds", "at least one seed is required".into());
        }
        for (i, s) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(s) {
                return invalid("seeds", format!("seed {s} is listed twice"));
            }
        }
        if self.budget == Some(0) {
            return invalid("budget", "budget must be positive".into());
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return invalid("noise", "noise must be a nonnegative number".into());
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return invalid("threshold_fraction", "must lie in (0, 1]".into());
        }
        if let Some(t) = &self.theta0 {
            if t.len() != self.problem.dim() {
                return invalid(
                    "theta0",
                    format!("has {} entries, the problem needs {}", t.len(), self.problem.dim()),
                );
            }
            if t.iter().any(|v| !v.is_finite()) {
                return invalid("theta0", "entries must be finite".into());
            }
        }
        if let Err(e) = self.scalarization_config().validate() {
            return invalid("scalarization", e.to_string());
        }
        if let Err(e) = self.gain_schedule().validate() {
            return invalid("gains", e.to_string());
        }
        if let Err(e) = self.history.validate() {
            return invalid("history", e.to_string());
        }
        if self.algorithm == Algorithm::EsBaseline {
            if let Err(e) = self.es.validate() {
                return invalid("es", e.to_string());
            }
        }
        if let Some(stop) = &self.early_stop {
            if stop.window == 0 || !stop.tolerance.is_finite() {
                return invalid(
                    "early_stop",
                    "window must be positive and tolerance finite".into(),
                );
            }
        }
        Ok(())
    }
}

/// First line on which `key` is assigned or opens a table.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        let assigned = l
            .strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='));
        assigned || l.starts_with(&format!("[{key}]"))
    })
    .map(|i| i + 1)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ExperimentConfig::from_toml(&text)
}

pub fn save_config(config: &ExperimentConfig, path: &Path) -> Result<(), ConfigError> {
    std::fs::write(path, config.to_toml()).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
