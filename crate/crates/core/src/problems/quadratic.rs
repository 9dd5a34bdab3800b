//! Two squared distances to distinct centers. The front is the segment between them.

use std::sync::Arc;

use super::ProblemError;
use crate::objective::{BlackBoxObjective, TwoObjectiveProblem, WhiteBoxObjective};
use crate::vector::ParamVector;

/// `||θ − center||²` with its exact gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredDistance {
    pub center: ParamVector,
}

impl SquaredDistance {
    fn eval(&self, theta: &ParamVector) -> f64 {
        theta
            .as_slice()
            .iter()
            .zip(self.center.as_slice())
            .map(|(t, c)| (t - c) * (t - c))
            .sum()
    }
}

impl WhiteBoxObjective for SquaredDistance {
    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn value(&self, theta: &ParamVector) -> f64 {
        self.eval(theta)
    }

    fn gradient(&self, theta: &ParamVector) -> ParamVector {
        let g = theta
            .as_slice()
            .iter()
            .zip(self.center.as_slice())
            .map(|(t, c)| 2.0 * (t - c))
            .collect();
        ParamVector::new(g).expect("finite gradient")
    }
}

/// `f₁ = ||θ − c₁||²` behind the black-box counter and `f₂ = ||θ − c₂||²` as the white box.
pub fn make_two_quadratic(
    dim: usize,
    c1: ParamVector,
    c2: ParamVector,
) -> Result<TwoObjectiveProblem, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::DimensionTooSmall { min: 1, actual: 0 });
    }
    for c in [&c1, &c2] {
        if c.dim() != dim {
            return Err(ProblemError::CenterDimension {
                expected: dim,
                actual: c.dim(),
            });
        }
    }
    if c1 == c2 {
        return Err(ProblemError::DegenerateCenters);
    }
    let first = Arc::new(SquaredDistance { center: c1 });
    let blackbox = BlackBoxObjective::from_fn(dim, move |theta: &ParamVector| first.eval(theta));
    Ok(TwoObjectiveProblem::new(
        blackbox,
        Box::new(SquaredDistance { center: c2 }),
    ))
}
