//! A two-objective problem whose front `f₂ = 1 − f₁²` is concave.
//!
//! Coordinates are squashed into `[0, 1]` by `s(x) = sin²(πx/2)`, which is smooth
//! everywhere and fixes 0, 1/2 and 1.

use std::f64::consts::FRAC_PI_2;

use super::ProblemError;
use crate::objective::{BlackBoxObjective, TwoObjectiveProblem, WhiteBoxObjective};
use crate::vector::ParamVector;

pub fn smooth_clamp(x: f64) -> f64 {
    let s = (FRAC_PI_2 * x).sin();
    s * s
}

fn smooth_clamp_derivative(x: f64) -> f64 {
    FRAC_PI_2 * (2.0 * FRAC_PI_2 * x).sin()
}

fn first(theta: &[f64]) -> f64 {
    smooth_clamp(theta[0])
}

fn spread(theta: &[f64]) -> f64 {
    let tail = &theta[1..];
    1.0 + 9.0 * tail.iter().map(|&x| smooth_clamp(x)).sum::<f64>() / tail.len() as f64
}

/// The second objective `g·(1 − (f₁/g)²)`, with gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConcaveWhiteBox {
    dim: usize,
}

impl ConcaveWhiteBox {
    pub fn new(dim: usize) -> Result<Self, ProblemError> {
        if dim < 2 {
            return Err(ProblemError::DimensionTooSmall { min: 2, actual: dim });
        }
        Ok(Self { dim })
    }
}

impl WhiteBoxObjective for ConcaveWhiteBox {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        let t = theta.as_slice();
        let (f1, g) = (first(t), spread(t));
        g * (1.0 - (f1 / g).powi(2))
    }

    fn gradient(&self, theta: &ParamVector) -> ParamVector {
        // f₂ = g − f₁²/g
        let t = theta.as_slice();
        let (f1, g) = (first(t), spread(t));
        let df2_df1 = -2.0 * f1 / g;
        let df2_dg = 1.0 + (f1 / g).powi(2);
        let tail = (self.dim - 1) as f64;
        let mut grad = Vec::with_capacity(self.dim);
        grad.push(df2_df1 * smooth_clamp_derivative(t[0]));
        for &x in &t[1..] {
            grad.push(df2_dg * 9.0 / tail * smooth_clamp_derivative(x));
        }
        ParamVector::new(grad).expect("finite gradient")
    }
}

/// `f₁ = s(θ₁)` behind the black-box counter, `f₂` as the white box. Requires `dim ≥ 2`.
pub fn make_concave_front(dim: usize) -> Result<TwoObjectiveProblem, ProblemError> {
    let whitebox = ConcaveWhiteBox::new(dim)?;
    let blackbox = BlackBoxObjective::from_fn(dim, |theta: &ParamVector| first(theta.as_slice()));
    Ok(TwoObjectiveProblem::new(blackbox, Box::new(whitebox)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{finite_difference_gradient, max_relative_error, ObjectivePair};
    use proptest::prelude::*;

    fn point(v: &[f64]) -> ParamVector {
        ParamVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn clamp_fixed_points() {
        assert_eq!(smooth_clamp(0.0), 0.0);
        assert!((smooth_clamp(0.5) - 0.5).abs() < 1e-15);
        assert!((smooth_clamp(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hand_values() {
        let p = make_concave_front(3).unwrap();
        let close = |a: ObjectivePair, b: ObjectivePair| {
            (a.blackbox - b.blackbox).abs() < 1e-12 && (a.whitebox - b.whitebox).abs() < 1e-12
        };
        assert!(close(p.evaluate_pair(&point(&[0.5, 0.0, 0.0])).unwrap(), ObjectivePair::new(0.5, 0.75)));
        assert!(close(p.evaluate_pair(&point(&[0.0, 0.0, 0.0])).unwrap(), ObjectivePair::new(0.0, 1.0)));
        assert!(close(p.evaluate_pair(&point(&[1.0, 0.0, 0.0])).unwrap(), ObjectivePair::new(1.0, 0.0)));
    }

    #[test]
    fn small_dimension_is_rejected() {
        assert_eq!(
            make_concave_front(1).unwrap_err(),
            ProblemError::DimensionTooSmall { min: 2, actual: 1 }
        );
    }

    proptest! {
        #[test]
        fn unit_slice_lies_on_the_front(x in -3.0f64..3.0, dim in 2usize..6) {
            let p = make_concave_front(dim).unwrap();
            let mut t = vec![0.0; dim];
            t[0] = x;
            let pair = p.evaluate_pair(&point(&t)).unwrap();
            prop_assert!((pair.whitebox - (1.0 - pair.blackbox * pair.blackbox)).abs() < 1e-12);
        }

        #[test]
        fn gradient_matches_finite_differences(t in prop::collection::vec(-2.0f64..2.0, 4)) {
            let w = ConcaveWhiteBox { dim: 4 };
            let theta = point(&t);
            let numeric = finite_difference_gradient(|p| w.value(p), &theta, 1e-6);
            prop_assert!(max_relative_error(w.gradient(&theta).as_slice(), &numeric) < 1e-6);
        }
    }
}
