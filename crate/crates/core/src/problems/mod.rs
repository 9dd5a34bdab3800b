//! Benchmark problems: analytic two-objective surfaces, a noisy sphere for query-budget
//! comparisons, a minimal evolution strategy baseline and a linear anonymizer toy.

mod anonymizer;
mod concave;
mod es;
mod quadratic;
mod sphere;

pub use anonymizer::{
    make_toy_anonymizer, read_dataset, write_dataset, AnonymizerSpec, Dataset, LogisticReviewer,
    PrivacyLoss, SoftmaxScorer, ToyAnonymizer, UtilityLoss,
};
pub use concave::{make_concave_front, smooth_clamp, ConcaveWhiteBox};
pub use es::{es_baseline, es_run, EsConfig};
pub use quadratic::{make_two_quadratic, SquaredDistance};
pub use sphere::{noisy_sphere_benchmark, sphere};

use thiserror::Error;

use crate::objective::ObjectiveError;
use crate::vector::VectorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("the two centers coincide, so the problem has no trade-off")]
    DegenerateCenters,
    #[error("dimension must be at least {min}, got {actual}")]
    DimensionTooSmall { min: usize, actual: usize },
    #[error("centers have dimension {actual}, expected {expected}")]
    CenterDimension { expected: usize, actual: usize },
    #[error("need at least {min} samples, got {actual}")]
    TooFewSamples { min: usize, actual: usize },
    #[error("population must be at least 2, got {0}")]
    Population(usize),
    #[error("step scale must be positive and finite, got {0}")]
    StepScale(f64),
    #[error("could not synthesize a dataset covering every class after {0} attempts")]
    Synthesis(u32),
    #[error("malformed dataset: {0}")]
    Dataset(String),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error(transparent)]
    Vector(#[from] VectorError),
}
