//! Leaf refits from the datapoints routed to a leaf.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;

/// How a leaf is refit to the values routed to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafUpdate {
    /// Empirical moments (Gaussian) or frequencies (discrete), floored.
    #[default]
    MomentMatch,
    /// The leaf minimizing the summed expected distance to its values,
    /// subject to the floors. Each WM step is then a coordinate descent step.
    DistanceMinimizing,
}

/// Floors shared by WM and EM leaf updates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Floors {
    pub sigma: f64,
    pub prob: f64,
}

/// Point minimizing `Σ_i w_i |v − x_i|^order` for `order ≥ 1`.
pub(crate) fn best_location(values: &[f64], order: f64) -> f64 {
    if order == 2.0 {
        return values.iter().sum::<f64>() / values.len() as f64;
    }
    let cost = |v: f64| values.iter().map(|x| (v - x).abs().powf(order)).sum::<f64>();
    let (mut lo, mut hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)));
    // Convex in v, so ternary search converges.
    for _ in 0..200 {
        let (a, b) = (lo + (hi - lo) / 3.0, hi - (hi - lo) / 3.0);
        if cost(a) <= cost(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

/// Frequencies with empty cells lifted to `floor`, then renormalized.
pub(crate) fn floored(mut probs: Vec<f64>, floor: f64) -> Vec<f64> {
    probs.iter_mut().for_each(|p| *p = p.max(floor));
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= total);
    probs
}

/// Discrete leaf with the given probabilities, keeping the leaf's kind.
pub(crate) fn discrete_like(leaf: &LeafDistribution, probs: Vec<f64>, floor: f64) -> LeafDistribution {
    match leaf {
        LeafDistribution::Bernoulli { .. } => LeafDistribution::Bernoulli { p: probs[1].clamp(floor, 1.0 - floor) },
        _ => LeafDistribution::Categorical { probs: floored(probs, floor) },
    }
}

/// Refit `leaf` (on variable `var`) to a non-empty set of routed values.
pub(crate) fn refit(
    leaf: &LeafDistribution,
    var: usize,
    values: &[f64],
    update: LeafUpdate,
    order: f64,
    floors: Floors,
) -> Result<LeafDistribution> {
    let n = values.len() as f64;
    Ok(match (leaf, update) {
        (LeafDistribution::Dirac { .. }, _) => LeafDistribution::Dirac { value: best_location(values, order) },
        (LeafDistribution::Gaussian { .. }, LeafUpdate::MomentMatch) => {
            let mu = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n;
            LeafDistribution::Gaussian { mu, sigma: var.sqrt().max(floors.sigma) }
        }
        (LeafDistribution::Gaussian { .. }, LeafUpdate::DistanceMinimizing) => {
            if order != 2.0 {
                return Err(Error::UnsupportedPair(format!("gaussian leaf needs order 2, got {order}")));
            }
            LeafDistribution::Gaussian { mu: best_location(values, 2.0), sigma: floors.sigma }
        }
        (_, LeafUpdate::MomentMatch) => {
            let mut counts = vec![0.0; leaf.support_size().expect("discrete leaf")];
            for x in values {
                counts[leaf.discrete_index(var, *x)?] += 1.0;
            }
            discrete_like(leaf, counts.into_iter().map(|c| c / n).collect(), floors.prob)
        }
        (_, LeafUpdate::DistanceMinimizing) => {
            let m = leaf.support_size().expect("discrete leaf");
            for x in values {
                leaf.discrete_index(var, *x)?;
            }
            let cost = |s: usize| values.iter().map(|x| (s as f64 - x).abs().powf(order)).sum::<f64>();
            // Lowest support point among ties.
            let best = (1..m).fold(0, |b, s| if cost(s) < cost(b) { s } else { b });
            let mut probs = vec![floors.prob; m];
            probs[best] = 1.0 - (m - 1) as f64 * floors.prob;
            discrete_like(leaf, probs, floors.prob)
        }
    })
}
