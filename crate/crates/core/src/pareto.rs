//! Pareto dominance, brute-force fronts over candidate sets and an empirical check that
//! minimizers of the augmented Tchebycheff objective are non-dominated.
//!
//! Optimality is always relative to the evaluated candidate set.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::objective::ObjectivePair;
use crate::scalarize::{Scalarization, ScalarizationConfig};
use crate::vector::{ParamVector, RngHandle};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParetoError {
    #[error("candidate set is empty")]
    Empty,
    #[error("candidate {0} has a non-finite objective value")]
    NonFinite(usize),
    #[error("weights must be strictly positive, got ({0}, {1})")]
    NonPositiveWeight(f64, f64),
}

/// `a` is no worse than `b` in both objectives and strictly better in one.
pub fn dominates(a: &ObjectivePair, b: &ObjectivePair) -> bool {
    let no_worse = a.blackbox <= b.blackbox && a.whitebox <= b.whitebox;
    let better = a.blackbox < b.blackbox || a.whitebox < b.whitebox;
    no_worse && better
}

/// `front` contains a point better than `pair` by more than `tolerance` in both objectives.
///
/// The additive slack turns "non-dominated up to `tolerance`" into an exact check.
pub fn dominated_beyond(pair: &ObjectivePair, front: &[ObjectivePair], tolerance: f64) -> bool {
    front.iter().any(|q| {
        let shifted = ObjectivePair::new(q.blackbox + tolerance, q.whitebox + tolerance);
        dominates(&shifted, pair)
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePoint {
    pub theta: ParamVector,
    pub pair: ObjectivePair,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    pub points: Vec<CandidatePoint>,
    /// Positions of the front members in the original candidate list.
    pub indices: Vec<usize>,
}

impl ParetoFront {
    pub fn pairs(&self) -> Vec<ObjectivePair> {
        self.points.iter().map(|p| p.pair).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Indices of the non-dominated pairs, by pairwise comparison.
pub fn non_dominated_indices(pairs: &[ObjectivePair]) -> Result<Vec<usize>, ParetoError> {
    if pairs.is_empty() {
        return Err(ParetoError::Empty);
    }
    if let Some(i) = pairs
        .iter()
        .position(|p| !p.blackbox.is_finite() || !p.whitebox.is_finite())
    {
        return Err(ParetoError::NonFinite(i));
    }
    Ok((0..pairs.len())
        .filter(|&i| !pairs.iter().any(|q| dominates(q, &pairs[i])))
        .collect())
}

pub fn pareto_front(candidates: &[CandidatePoint]) -> Result<ParetoFront, ParetoError> {
    let pairs: Vec<ObjectivePair> = candidates.iter().map(|c| c.pair).collect();
    let indices = non_dominated_indices(&pairs)?;
    Ok(ParetoFront {
        points: indices.iter().map(|&i| candidates[i].clone()).collect(),
        indices,
    })
}

/// Evenly spaced points on `[lo, hi]²` with `resolution` points per axis.
pub fn square_grid(lo: f64, hi: f64, resolution: usize) -> Vec<ParamVector> {
    let axis: Vec<f64> = if resolution <= 1 {
        vec![lo]
    } else {
        (0..resolution)
            .map(|i| lo + (hi - lo) * i as f64 / (resolution - 1) as f64)
            .collect()
    };
    let mut grid = Vec::with_capacity(axis.len() * axis.len());
    for &x in &axis {
        for &y in &axis {
            grid.push(ParamVector::new(vec![x, y]).expect("finite grid"));
        }
    }
    grid
}

/// Draws `count` strictly positive weight pairs normalized to sum to one.
pub fn random_weights(count: usize, rng: &mut RngHandle) -> Vec<[f64; 2]> {
    (0..count)
        .map(|_| {
            let l1 = 0.02 + 0.96 * rng.uniform();
            [l1, 1.0 - l1]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVerdict {
    pub lambda: [f64; 2],
    pub argmin: usize,
    pub pair: ObjectivePair,
    pub non_dominated: bool,
    /// The argmin is one of the two extreme points of the grid front.
    pub at_extreme: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub scalarization: Scalarization,
    pub grid_size: usize,
    pub front_size: usize,
    pub verdicts: Vec<WeightVerdict>,
    /// Fraction of front points that are the argmin for some weight in the dense sweep.
    pub coverage: f64,
    pub sweep_size: usize,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.non_dominated)
    }

    pub fn passed_count(&self) -> usize {
        self.verdicts.iter().filter(|v| v.non_dominated).count()
    }

    pub fn extremes_only(&self) -> bool {
        self.verdicts.iter().all(|v| v.at_extreme)
    }
}

fn argmin_for(
    pairs: &[ObjectivePair],
    scalarization: Scalarization,
    config: &ScalarizationConfig,
) -> usize {
    // Rounding is monotone, so a dominated pair can at best tie with the pair dominating
    // it; exact ties go to the lexicographically smaller pair.
    let mut best = 0;
    let mut best_value = f64::INFINITY;
    for (i, p) in pairs.iter().enumerate() {
        let v = scalarization.value(p, config);
        let q = &pairs[best];
        let smaller_pair = (p.blackbox, p.whitebox) < (q.blackbox, q.whitebox);
        if v < best_value || (v == best_value && smaller_pair) {
            best = i;
            best_value = v;
        }
    }
    best
}

/// Checks that the grid minimizer of the chosen scalarization is on the grid's front for
/// every weight, and measures how much of the front a dense weight sweep reaches.
///
/// `pairs` are the objective values of the grid points.
pub fn verify_theorem1(
    pairs: &[ObjectivePair],
    lambdas: &[[f64; 2]],
    base: &ScalarizationConfig,
    scalarization: Scalarization,
    sweep_size: usize,
) -> Result<TheoremReport, ParetoError> {
    for l in lambdas {
        if !(l[0] > 0.0 && l[1] > 0.0) {
            return Err(ParetoError::NonPositiveWeight(l[0], l[1]));
        }
    }
    let front = non_dominated_indices(pairs)?;
    let mut on_front = vec![false; pairs.len()];
    for &i in &front {
        on_front[i] = true;
    }
    let extremes = front_extremes(pairs, &front);

    let verdicts = lambdas
        .iter()
        .map(|&lambda| {
            let config = ScalarizationConfig { lambda, ..*base };
            let argmin = argmin_for(pairs, scalarization, &config);
            let pair = pairs[argmin];
            WeightVerdict {
                lambda,
                argmin,
                pair,
                non_dominated: on_front[argmin],
                at_extreme: extremes.iter().any(|e| pairs[*e] == pair),
            }
        })
        .collect();

    let mut reached = vec![false; pairs.len()];
    for j in 0..sweep_size {
        let l1 = (j as f64 + 0.5) / sweep_size as f64;
        let config = ScalarizationConfig {
            lambda: [l1, 1.0 - l1],
            ..*base
        };
        let argmin = argmin_for(pairs, scalarization, &config);
        // every candidate with the same objective values is reached as well
        for &i in &front {
            if pairs[i] == pairs[argmin] {
                reached[i] = true;
            }
        }
    }
    let covered = front.iter().filter(|&&i| reached[i]).count();

    Ok(TheoremReport {
        scalarization,
        grid_size: pairs.len(),
        front_size: front.len(),
        verdicts,
        coverage: covered as f64 / front.len() as f64,
        sweep_size,
    })
}

/// Front members with the smallest first and smallest second objective.
fn front_extremes(pairs: &[ObjectivePair], front: &[usize]) -> Vec<usize> {
    let by = |key: fn(&ObjectivePair) -> f64| {
        front
            .iter()
            .copied()
            .min_by(|&a, &b| key(&pairs[a]).total_cmp(&key(&pairs[b])))
            .expect("front is non-empty")
    };
    vec![by(|p| p.blackbox), by(|p| p.whitebox)]
}

/// Greedy clustering of objective pairs: a pair joins the first cluster whose seed is
/// within `radius` in both coordinates. Returns the cluster seeds.
pub fn cluster_pairs(pairs: &[ObjectivePair], radius: f64) -> Vec<ObjectivePair> {
    let mut seeds: Vec<ObjectivePair> = Vec::new();
    for p in pairs {
        let close = seeds.iter().any(|s| {
            (s.blackbox - p.blackbox).abs() <= radius && (s.whitebox - p.whitebox).abs() <= radius
        });
        if !close {
            seeds.push(*p);
        }
    }
    seeds
}
