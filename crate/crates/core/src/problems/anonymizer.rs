//! A linear anonymizer over a synthetic dataset.
//!
//! Each sample carries a task label (one of four classes) and a private bit. The
//! anonymizer maps features `x` to `Wx + b`. A frozen softmax scorer trained on raw data
//! measures utility as a black box, and a frozen logistic reviewer trained on raw data
//! measures leakage of the private bit. The privacy loss is the reviewer's negated
//! cross-entropy, so lowering it means the reviewer fails more often.

use std::io::{Read, Write};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::objective::{BlackBoxObjective, ObjectivePair, TwoObjectiveProblem, ValueFn, WhiteBoxObjective};
use crate::vector::{ParamVector, RngHandle};

const CLASSES: usize = 4;
const MAX_ATTEMPTS: u32 = 16;

/// Shape of the synthetic dataset and of the starting point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnonymizerSpec {
    pub samples: usize,
    pub features: usize,
    /// Shift applied to the class feature of each sample.
    pub class_separation: f64,
    /// Shift of the private features, signed by the private bit.
    pub private_separation: f64,
    pub feature_noise: f64,
    /// Scale of the Gaussian perturbation of the identity in the starting `W`.
    pub init_noise: f64,
}

impl Default for AnonymizerSpec {
    fn default() -> Self {
        Self {
            samples: 1000,
            features: 8,
            class_separation: 2.0,
            private_separation: 1.0,
            feature_noise: 1.0,
            init_noise: 0.01,
        }
    }
}

impl AnonymizerSpec {
    /// Features that carry the class signal: the first four.
    fn class_block(&self) -> std::ops::Range<usize> {
        0..CLASSES.min(self.features)
    }

    /// Features that carry the private bit: the third through sixth, overlapping the
    /// class block on the third and fourth.
    fn private_block(&self) -> std::ops::Range<usize> {
        let end = 6.min(self.features);
        2.min(self.features - 1)..end
    }

    /// Length of `θ`: a `D×D` matrix in row-major order followed by a bias of length `D`.
    pub fn theta_dim(&self) -> usize {
        self.features * self.features + self.features
    }

    fn validate(&self) -> Result<(), ProblemError> {
        if self.samples < 100 {
            return Err(ProblemError::TooFewSamples {
                min: 100,
                actual: self.samples,
            });
        }
        if self.features < 2 {
            return Err(ProblemError::DimensionTooSmall {
                min: 2,
                actual: self.features,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: usize,
    /// Row-major `N×D` feature matrix.
    pub x: Vec<f64>,
    pub labels: Vec<usize>,
    pub private: Vec<u8>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, n: usize) -> &[f64] {
        &self.x[n * self.features..(n + 1) * self.features]
    }

    /// Every class and both private values occur.
    pub fn covers_all_groups(&self) -> bool {
        let classes = (0..CLASSES).all(|c| self.labels.contains(&c));
        classes && self.private.contains(&0) && self.private.contains(&1)
    }

    /// Applies `x ↦ Wx + b` to every row.
    pub fn transformed(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.features;
        let (w, b) = theta.split_at(d * d);
        let mut out = Vec::with_capacity(self.x.len());
        for n in 0..self.len() {
            let x = self.row(n);
            for i in 0..d {
                let row = &w[i * d..(i + 1) * d];
                out.push(dot(row, x) + b[i]);
            }
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn synthesize(spec: &AnonymizerSpec, rng: &mut RngHandle) -> Dataset {
    let d = spec.features;
    let class_block = spec.class_block();
    let private_block = spec.private_block();
    let mut x = Vec::with_capacity(spec.samples * d);
    let mut labels = Vec::with_capacity(spec.samples);
    let mut private = Vec::with_capacity(spec.samples);
    for _ in 0..spec.samples {
        let label = rng.rng_mut().random_range(0..CLASSES);
        let bit = u8::from(rng.next_bool());
        let mut row: Vec<f64> = (0..d).map(|_| spec.feature_noise * rng.standard_normal()).collect();
        row[class_block.start + label % class_block.len()] += spec.class_separation;
        let sign = if bit == 1 { 1.0 } else { -1.0 };
        for j in private_block.clone() {
            row[j] += sign * spec.private_separation;
        }
        x.extend(row);
        labels.push(label);
        private.push(bit);
    }
    // center each column so a constant input carries no information
    for j in 0..d {
        let mean = x.iter().skip(j).step_by(d).sum::<f64>() / spec.samples as f64;
        for v in x.iter_mut().skip(j).step_by(d) {
            *v -= mean;
        }
    }
    Dataset {
        features: d,
        x,
        labels,
        private,
    }
}

/// Multinomial logistic regression over `CLASSES` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxScorer {
    /// Row-major `K×D` weights.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl SoftmaxScorer {
    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let d = x.len();
        (0..self.bias.len())
            .map(|k| dot(&self.weights[k * d..(k + 1) * d], x) + self.bias[k])
            .collect()
    }

    /// Mean cross-entropy over rows of `x` (row-major, `features` wide).
    pub fn loss(&self, x: &[f64], features: usize, labels: &[usize]) -> f64 {
        let mut total = 0.0;
        for (n, &label) in labels.iter().enumerate() {
            let z = self.logits(&x[n * features..(n + 1) * features]);
            let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            total += lse - z[label];
        }
        total / labels.len() as f64
    }

    fn train(data: &Dataset, epochs: usize, rate: f64, l2: f64) -> Self {
        let d = data.features;
        let mut model = SoftmaxScorer {
            weights: vec![0.0; CLASSES * d],
            bias: vec![0.0; CLASSES],
        };
        let n = data.len() as f64;
        for _ in 0..epochs {
            let mut gw = vec![0.0; CLASSES * d];
            let mut gb = vec![0.0; CLASSES];
            for i in 0..data.len() {
                let x = data.row(i);
                let z = model.logits(x);
                let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
                let s: f64 = e.iter().sum();
                for k in 0..CLASSES {
                    let r = e[k] / s - f64::from(u8::from(k == data.labels[i]));
                    gb[k] += r / n;
                    for j in 0..d {
                        gw[k * d + j] += r * x[j] / n;
                    }
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= rate * (g + l2 * *w);
            }
            for (b, g) in model.bias.iter_mut().zip(&gb) {
                *b -= rate * g;
            }
        }
        model
    }
}

/// Logistic regression predicting the private bit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticReviewer {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticReviewer {
    fn logit(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// Mean binary cross-entropy over rows of `x`.
    pub fn loss(&self, x: &[f64], features: usize, bits: &[u8]) -> f64 {
        let total: f64 = bits
            .iter()
            .enumerate()
            .map(|(n, &p)| {
                let z = self.logit(&x[n * features..(n + 1) * features]);
                softplus(z) - f64::from(p) * z
            })
            .sum();
        total / bits.len() as f64
    }

    fn train(data: &Dataset, epochs: usize, rate: f64, l2: f64) -> Self {
        let d = data.features;
        let mut model = LogisticReviewer {
            weights: vec![0.0; d],
            bias: 0.0,
        };
        let n = data.len() as f64;
        for _ in 0..epochs {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for i in 0..data.len() {
                let x = data.row(i);
                let r = sigmoid(model.logit(x)) - f64::from(data.private[i]);
                gb += r / n;
                for j in 0..d {
                    gw[j] += r * x[j] / n;
                }
            }
            for (w, g) in model.weights.iter_mut().zip(&gw) {
                *w -= rate * (g + l2 * *w);
            }
            model.bias -= rate * gb;
        }
        model
    }
}

/// Mean cross-entropy of the frozen scorer on anonymized data. Value only.
#[derive(Debug, Clone)]
pub struct UtilityLoss {
    data: Arc<Dataset>,
    scorer: Arc<SoftmaxScorer>,
}

impl ValueFn for UtilityLoss {
    fn dim(&self) -> usize {
        self.data.features * self.data.features + self.data.features
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        let xa = self.data.transformed(theta.as_slice());
        self.scorer.loss(&xa, self.data.features, &self.data.labels)
    }
}

/// Negated mean cross-entropy of the frozen reviewer on anonymized data.
#[derive(Debug, Clone)]
pub struct PrivacyLoss {
    data: Arc<Dataset>,
    reviewer: Arc<LogisticReviewer>,
}

impl WhiteBoxObjective for PrivacyLoss {
    fn dim(&self) -> usize {
        self.data.features * self.data.features + self.data.features
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        let xa = self.data.transformed(theta.as_slice());
        -self.reviewer.loss(&xa, self.data.features, &self.data.private)
    }

    fn gradient(&self, theta: &ParamVector) -> ParamVector {
        let d = self.data.features;
        let xa = self.data.transformed(theta.as_slice());
        let v = &self.reviewer.weights;
        let n = self.data.len() as f64;
        let mut grad = vec![0.0; d * d + d];
        for s in 0..self.data.len() {
            let z = self.reviewer.logit(&xa[s * d..(s + 1) * d]);
            let dz = -(sigmoid(z) - f64::from(self.data.private[s])) / n;
            let x = self.data.row(s);
            for i in 0..d {
                let coef = dz * v[i];
                for j in 0..d {
                    grad[i * d + j] += coef * x[j];
                }
                grad[d * d + i] += coef;
            }
        }
        ParamVector::new(grad).expect("finite gradient")
    }
}

/// A synthesized dataset with the two frozen models and a starting point near identity.
#[derive(Debug, Clone)]
pub struct ToyAnonymizer {
    pub spec: AnonymizerSpec,
    pub data: Arc<Dataset>,
    pub scorer: Arc<SoftmaxScorer>,
    pub reviewer: Arc<LogisticReviewer>,
    pub theta0: ParamVector,
}

impl ToyAnonymizer {
    /// A fresh problem instance with its own black-box counter.
    pub fn problem(&self) -> TwoObjectiveProblem {
        let blackbox = BlackBoxObjective::new(self.utility());
        TwoObjectiveProblem::new(blackbox, Box::new(self.privacy()))
    }

    pub fn utility(&self) -> UtilityLoss {
        UtilityLoss {
            data: Arc::clone(&self.data),
            scorer: Arc::clone(&self.scorer),
        }
    }

    pub fn privacy(&self) -> PrivacyLoss {
        PrivacyLoss {
            data: Arc::clone(&self.data),
            reviewer: Arc::clone(&self.reviewer),
        }
    }

    /// `W = I`, `b = 0`.
    pub fn identity_theta(&self) -> ParamVector {
        let d = self.data.features;
        let mut theta = vec![0.0; self.spec.theta_dim()];
        for i in 0..d {
            theta[i * d + i] = 1.0;
        }
        ParamVector::new(theta).expect("finite identity")
    }

    /// Both losses on the untransformed data, without touching any counter.
    pub fn raw_losses(&self) -> ObjectivePair {
        let d = self.data.features;
        ObjectivePair::new(
            self.scorer.loss(&self.data.x, d, &self.data.labels),
            -self.reviewer.loss(&self.data.x, d, &self.data.private),
        )
    }
}

/// Synthesizes the dataset, trains both models on raw data and freezes them.
///
/// A draw that misses a class or a private value is discarded and redrawn from the next
/// stream of `rng`'s seed.
pub fn make_toy_anonymizer(rng: &RngHandle, spec: AnonymizerSpec) -> Result<ToyAnonymizer, ProblemError> {
    spec.validate()?;
    let (data, mut stream) = (0..MAX_ATTEMPTS)
        .find_map(|attempt| {
            let mut stream = rng.substream(rng.stream() + u64::from(attempt));
            let data = synthesize(&spec, &mut stream);
            data.covers_all_groups().then_some((data, stream))
        })
        .ok_or(ProblemError::Synthesis(MAX_ATTEMPTS))?;
    let scorer = SoftmaxScorer::train(&data, 300, 0.5, 1e-3);
    let reviewer = LogisticReviewer::train(&data, 300, 0.5, 1e-3);

    let d = spec.features;
    let mut theta = vec![0.0; spec.theta_dim()];
    for i in 0..d {
        for j in 0..d {
            let base = if i == j { 1.0 } else { 0.0 };
            theta[i * d + j] = base + spec.init_noise * stream.standard_normal();
        }
    }
    Ok(ToyAnonymizer {
        spec,
        data: Arc::new(data),
        scorer: Arc::new(scorer),
        reviewer: Arc::new(reviewer),
        theta0: ParamVector::new(theta)?,
    })
}

/// Writes one sample per line: the features, then the task label and the private bit.
pub fn write_dataset(data: &Dataset, out: impl Write) -> Result<(), ProblemError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=data.features).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    header.push("private".into());
    let io = |e: csv::Error| ProblemError::Dataset(e.to_string());
    w.write_record(&header).map_err(io)?;
    for n in 0..data.len() {
        let mut rec: Vec<String> = data.row(n).iter().map(|v| v.to_string()).collect();
        rec.push(data.labels[n].to_string());
        rec.push(data.private[n].to_string());
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| ProblemError::Dataset(e.to_string()))
}

pub fn read_dataset(input: impl Read) -> Result<Dataset, ProblemError> {
    let mut r = csv::Reader::from_reader(input);
    let bad = |msg: String| ProblemError::Dataset(msg);
    let width = r.headers().map_err(|e| bad(e.to_string()))?.len();
    if width < 3 {
        return Err(bad(format!("expected at least 3 columns, found {width}")));
    }
    let features = width - 2;
    let mut data = Dataset {
        features,
        x: Vec::new(),
        labels: Vec::new(),
        private: Vec::new(),
    };
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let field = |j: usize| rec.get(j).unwrap_or_default();
        for j in 0..features {
            let v: f64 = field(j)
                .parse()
                .map_err(|_| bad(format!("row {}: bad feature {:?}", line + 1, field(j))))?;
            data.x.push(v);
        }
        let label: usize = field(features)
            .parse()
            .map_err(|_| bad(format!("row {}: bad label", line + 1)))?;
        let bit: u8 = field(features + 1)
            .parse()
            .ok()
            .filter(|b| *b <= 1)
            .ok_or_else(|| bad(format!("row {}: private bit must be 0 or 1", line + 1)))?;
        data.labels.push(label);
        data.private.push(bit);
    }
    Ok(data)
}
