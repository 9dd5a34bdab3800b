//! The sphere `||θ||²`, optionally observed through Gaussian noise.

use super::ProblemError;
use crate::objective::BlackBoxObjective;
use crate::vector::{ParamVector, RngHandle};

pub fn sphere(theta: &ParamVector) -> f64 {
    theta.as_slice().iter().map(|x| x * x).sum()
}

/// `||θ||² + noise_scale·N(0, 1)` as a counted black box. Noise draws come from `rng`.
pub fn noisy_sphere_benchmark(
    dim: usize,
    noise_scale: f64,
    rng: RngHandle,
) -> Result<BlackBoxObjective, ProblemError> {
    if dim == 0 {
        return Err(ProblemError::DimensionTooSmall { min: 1, actual: 0 });
    }
    let clean = BlackBoxObjective::from_fn(dim, sphere);
    Ok(if noise_scale > 0.0 {
        clean.make_noisy(noise_scale, rng)
    } else {
        clean
    })
}
