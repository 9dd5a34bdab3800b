//! Dense parameter vectors, seeded random streams and Bernoulli ±1 perturbations.
//!
//! Everything numeric in the crate runs on `f64`. A [`ParamVector`] can never hold a
//! NaN or infinity: constructors and arithmetic that could produce one return
//! [`VectorError::NonFinite`] instead.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VectorError {
    #[error("invalid dimension {0}: vectors must have at least one coordinate")]
    InvalidDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("non-finite value {value} at coordinate {index}")]
    NonFinite { index: usize, value: f64 },
}

/// A point in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<f64>);

impl<'de> Deserialize<'de> for ParamVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let values = Vec::<f64>::deserialize(deserializer)?;
        ParamVector::new(values).map_err(serde::de::Error::custom)
    }
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self, VectorError> {
        if values.is_empty() {
            return Err(VectorError::InvalidDimension(0));
        }
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Result<Self, VectorError> {
        Self::filled(dim, 0.0)
    }

    pub fn filled(dim: usize, value: f64) -> Result<Self, VectorError> {
        if dim == 0 {
            return Err(VectorError::InvalidDimension(0));
        }
        Self::new(vec![value; dim])
    }

    /// The `index`-th standard basis vector scaled by `scale`.
    pub fn basis(dim: usize, index: usize, scale: f64) -> Result<Self, VectorError> {
        let mut values = vec![0.0; dim.max(1)];
        if dim == 0 || index >= dim {
            return Err(VectorError::InvalidDimension(dim));
        }
        values[index] = scale;
        Self::new(values)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &ParamVector) -> Result<ParamVector, VectorError> {
        self.check_dim(other)?;
        let values = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(x, y)| alpha * x + y)
            .collect();
        ParamVector::new(values)
    }

    pub fn scale(&self, alpha: f64) -> Result<ParamVector, VectorError> {
        ParamVector::new(self.0.iter().map(|x| alpha * x).collect())
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64, VectorError> {
        self.check_dim(other)?;
        Ok(self.0.iter().zip(&other.0).map(|(x, y)| x * y).sum())
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Cosine of the angle between two vectors.
    ///
    /// Returns `Ok(None)` when either vector has zero norm: the angle is undefined there and
    /// the caller has to pick a fallback.
    pub fn cosine(&self, other: &ParamVector) -> Result<Option<f64>, VectorError> {
        let dot = self.dot(other)?;
        let denom = self.l2_norm() * other.l2_norm();
        if denom == 0.0 {
            return Ok(None);
        }
        Ok(Some((dot / denom).clamp(-1.0, 1.0)))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }

    fn check_dim(&self, other: &ParamVector) -> Result<(), VectorError> {
        if self.dim() != other.dim() {
            return Err(VectorError::DimensionMismatch {
                left: self.dim(),
                right: other.dim(),
            });
        }
        Ok(())
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_finite(values: &[f64]) -> Result<(), VectorError> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(VectorError::NonFinite {
            index,
            value: values[index],
        }),
        None => Ok(()),
    }
}

/// A simultaneous perturbation direction with every coordinate equal to +1 or -1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PerturbationVector(Vec<i8>);

impl PerturbationVector {
    /// Builds a perturbation from explicit signs; any non-positive entry becomes -1.
    pub fn from_signs(signs: &[i8]) -> Result<Self, VectorError> {
        if signs.is_empty() {
            return Err(VectorError::InvalidDimension(0));
        }
        Ok(Self(
            signs.iter().map(|&s| if s > 0 { 1 } else { -1 }).collect(),
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().map(|&s| f64::from(s))
    }

    /// `theta + scale * self`.
    pub fn offset(&self, theta: &ParamVector, scale: f64) -> Result<ParamVector, VectorError> {
        if theta.dim() != self.dim() {
            return Err(VectorError::DimensionMismatch {
                left: theta.dim(),
                right: self.dim(),
            });
        }
        ParamVector::new(
            theta
                .as_slice()
                .iter()
                .zip(self.iter())
                .map(|(t, d)| t + scale * d)
                .collect(),
        )
    }
}

/// A reproducible random stream identified by `(seed, stream)`.
///
/// Backed by ChaCha8, whose 64-bit stream id selects an independent keystream for the
/// same seed, so replicate runs can derive disjoint streams from one seed.
#[derive(Debug, Clone)]
pub struct RngHandle {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngHandle {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    /// A fresh handle on another stream of the same seed.
    pub fn substream(&self, stream: u64) -> RngHandle {
        RngHandle::new(self.seed, stream)
    }

    pub fn next_bool(&mut self) -> bool {
        self.rng.random::<bool>()
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut self.rng)
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Draws a Bernoulli ±1 perturbation of the given dimension.
pub fn sample_perturbation(
    rng: &mut RngHandle,
    dim: usize,
) -> Result<PerturbationVector, VectorError> {
    if dim == 0 {
        return Err(VectorError::InvalidDimension(0));
    }
    Ok(PerturbationVector(
        (0..dim)
            .map(|_| if rng.next_bool() { 1 } else { -1 })
            .collect(),
    ))
}

/// Draws a vector of independent standard normal coordinates.
pub fn sample_gaussian(rng: &mut RngHandle, dim: usize) -> Result<ParamVector, VectorError> {
    if dim == 0 {
        return Err(VectorError::InvalidDimension(0));
    }
    ParamVector::new((0..dim).map(|_| rng.standard_normal()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(values: &[f64]) -> ParamVector {
        ParamVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            ParamVector::new(vec![1.0, f64::NAN]),
            Err(VectorError::NonFinite { index: 1, .. })
        ));
        assert_eq!(
            ParamVector::new(vec![]),
            Err(VectorError::InvalidDimension(0))
        );
    }

    #[test]
    fn axpy_examples() {
        let x = pv(&[1.0, 2.0]);
        let y = pv(&[3.0, 4.0]);
        assert_eq!(x.axpy(0.0, &y).unwrap(), y);
        assert_eq!(x.axpy(1.0, &ParamVector::zeros(2).unwrap()).unwrap(), x);
        assert_eq!(x.axpy(2.0, &y).unwrap(), pv(&[5.0, 8.0]));
        assert!(matches!(
            x.axpy(1.0, &pv(&[1.0])),
            Err(VectorError::DimensionMismatch { left: 2, right: 1 })
        ));
    }

    #[test]
    fn axpy_overflow_is_an_error() {
        let x = pv(&[f64::MAX]);
        assert!(x.axpy(2.0, &x).is_err());
    }

    #[test]
    fn norm_examples() {
        assert_eq!(pv(&[0.0, 0.0, 0.0]).l2_norm(), 0.0);
        assert_eq!(pv(&[3.0, 4.0]).l2_norm(), 5.0);
        assert_eq!(pv(&[1.0, 1.0, 1.0, 1.0]).l2_norm(), 2.0);
    }

    #[test]
    fn cosine_examples() {
        let x = pv(&[0.3, -1.2]);
        assert!((x.cosine(&x).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(pv(&[1.0, 0.0]).cosine(&pv(&[0.0, 1.0])).unwrap(), Some(0.0));
        assert_eq!(pv(&[1.0, 0.0]).cosine(&pv(&[0.0, 0.0])).unwrap(), None);
        assert!(pv(&[1.0]).cosine(&pv(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn perturbation_rejects_zero_dim() {
        let mut rng = RngHandle::new(1, 0);
        assert_eq!(
            sample_perturbation(&mut rng, 0),
            Err(VectorError::InvalidDimension(0))
        );
    }

    #[test]
    fn perturbation_is_deterministic_per_stream() {
        let a = sample_perturbation(&mut RngHandle::new(9, 4), 16).unwrap();
        let b = sample_perturbation(&mut RngHandle::new(9, 4), 16).unwrap();
        let c = sample_perturbation(&mut RngHandle::new(9, 5), 16).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn perturbation_is_unbiased() {
        let mut rng = RngHandle::new(2024, 0);
        let draws = 100_000;
        let sum: f64 = (0..draws)
            .map(|_| sample_perturbation(&mut rng, 1).unwrap().iter().next().unwrap())
            .sum();
        let mean = sum / draws as f64;
        assert!(mean.abs() <= 0.02, "mean {mean}");
    }

    proptest! {
        #[test]
        fn perturbation_entries_are_signs(seed in any::<u64>(), stream in any::<u64>(), dim in 1usize..64) {
            let delta = sample_perturbation(&mut RngHandle::new(seed, stream), dim).unwrap();
            prop_assert_eq!(delta.dim(), dim);
            prop_assert!(delta.iter().all(|d| d == 1.0 || d == -1.0));
        }

        #[test]
        fn norm_is_absolutely_homogeneous(
            values in prop::collection::vec(-1e3f64..1e3, 1..20),
            a in -1e3f64..1e3,
        ) {
            let x = ParamVector::new(values).unwrap();
            let zero = ParamVector::zeros(x.dim()).unwrap();
            let scaled = x.axpy(a, &zero).unwrap();
            let expected = a.abs() * x.l2_norm();
            prop_assert!((scaled.l2_norm() - expected).abs() <= 1e-9 * (1.0 + expected));
        }

        #[test]
        fn cosine_is_symmetric_and_scale_invariant(
            pair in (1usize..12).prop_flat_map(|n| (
                prop::collection::vec(-10.0f64..10.0, n),
                prop::collection::vec(-10.0f64..10.0, n),
            )),
            a in 1e-3f64..1e3,
            b in 1e-3f64..1e3,
        ) {
            let x = ParamVector::new(pair.0).unwrap();
            let y = ParamVector::new(pair.1).unwrap();
            prop_assume!(x.l2_norm() > 1e-6 && y.l2_norm() > 1e-6);
            let base = x.cosine(&y).unwrap().unwrap();
            prop_assert_eq!(y.cosine(&x).unwrap().unwrap(), base);
            let scaled = x.scale(a).unwrap().cosine(&y.scale(b).unwrap()).unwrap().unwrap();
            prop_assert!((scaled - base).abs() <= 1e-12);
        }
    }
}
