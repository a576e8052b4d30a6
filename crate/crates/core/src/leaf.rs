//! Univariate input distributions.

use std::borrow::Cow;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound on Gaussian standard deviations.
pub const SIGMA_FLOOR: f64 = 1e-3;
/// Lower bound on discrete probabilities produced by parameter updates.
pub const PROB_FLOOR: f64 = 1e-6;
/// Tolerance on probability vectors read from files before renormalization.
pub const WEIGHT_TOLERANCE: f64 = 1e-9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LeafDistribution {
    Bernoulli { p: f64 },
    Categorical { probs: Vec<f64> },
    Gaussian { mu: f64, sigma: f64 },
    /// Point mass; produced when conditioning deterministic transport maps.
    Dirac { value: f64 },
}

impl LeafDistribution {
    /// Checks parameters, renormalizing categorical probabilities that are
    /// within tolerance of the simplex.
    pub fn validated(self) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidCircuit(msg));
        match self {
            LeafDistribution::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return bad(format!("bernoulli parameter {p} outside [0,1]"));
                }
                Ok(self)
            }
            LeafDistribution::Categorical { probs } => {
                if probs.is_empty() {
                    return bad("categorical with empty support".into());
                }
                if probs.iter().any(|q| !q.is_finite() || *q < 0.0) {
                    return bad("categorical probability negative or non-finite".into());
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > WEIGHT_TOLERANCE {
                    return bad(format!("categorical probabilities sum to {total}"));
                }
                Ok(LeafDistribution::Categorical {
                    probs: probs.iter().map(|q| q / total).collect(),
                })
            }
            LeafDistribution::Gaussian { mu, sigma } => {
                if !mu.is_finite() || !sigma.is_finite() || sigma < SIGMA_FLOOR {
                    return bad(format!("gaussian parameters mu={mu} sigma={sigma}"));
                }
                Ok(self)
            }
            LeafDistribution::Dirac { value } => {
                if !value.is_finite() {
                    return bad("dirac at non-finite value".into());
                }
                Ok(self)
            }
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            LeafDistribution::Bernoulli { .. } => "bernoulli",
            LeafDistribution::Categorical { .. } => "categorical",
            LeafDistribution::Gaussian { .. } => "gaussian",
            LeafDistribution::Dirac { .. } => "dirac",
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(
            self,
            LeafDistribution::Bernoulli { .. } | LeafDistribution::Categorical { .. }
        )
    }

    /// Probability vector over the integer support `0..m` of a discrete leaf.
    pub fn probs(&self) -> Option<Cow<'_, [f64]>> {
        match self {
            LeafDistribution::Bernoulli { p } => Some(Cow::Owned(vec![1.0 - p, *p])),
            LeafDistribution::Categorical { probs } => Some(Cow::Borrowed(probs)),
            _ => None,
        }
    }

    pub fn support_size(&self) -> Option<usize> {
        match self {
            LeafDistribution::Bernoulli { .. } => Some(2),
            LeafDistribution::Categorical { probs } => Some(probs.len()),
            _ => None,
        }
    }

    /// Support index of `x` for a discrete leaf.
    pub(crate) fn discrete_index(&self, var: usize, x: f64) -> Result<usize> {
        let m = self.support_size().expect("discrete leaf");
        if x >= 0.0 && x.fract() == 0.0 && (x as usize) < m {
            Ok(x as usize)
        } else {
            Err(Error::Domain { var, value: x })
        }
    }

    /// Mass (discrete, Dirac) or density (Gaussian) at `x`.
    pub fn density(&self, var: usize, x: f64) -> Result<f64> {
        match self {
            LeafDistribution::Bernoulli { p } => {
                Ok(if self.discrete_index(var, x)? == 1 { *p } else { 1.0 - p })
            }
            LeafDistribution::Categorical { probs } => Ok(probs[self.discrete_index(var, x)?]),
            LeafDistribution::Gaussian { .. } => Ok(self.log_density(var, x)?.exp()),
            LeafDistribution::Dirac { value } => Ok(if x == *value { 1.0 } else { 0.0 }),
        }
    }

    pub fn log_density(&self, var: usize, x: f64) -> Result<f64> {
        match self {
            LeafDistribution::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                Ok(-0.5 * z * z - sigma.ln() - LN_SQRT_2PI)
            }
            _ => Ok(self.density(var, x)?.ln()),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            LeafDistribution::Bernoulli { p } => *p,
            LeafDistribution::Categorical { probs } => {
                probs.iter().enumerate().map(|(i, q)| i as f64 * q).sum()
            }
            LeafDistribution::Gaussian { mu, .. } => *mu,
            LeafDistribution::Dirac { value } => *value,
        }
    }

    /// `E |X - d|^order` under this leaf.
    pub fn expected_distance(&self, var: usize, d: f64, order: f64) -> Result<f64> {
        match self {
            LeafDistribution::Gaussian { mu, sigma } => {
                if order != 2.0 {
                    return Err(Error::UnsupportedPair(format!(
                        "gaussian expected distance needs order 2, got {order}"
                    )));
                }
                Ok((mu - d) * (mu - d) + sigma * sigma)
            }
            LeafDistribution::Dirac { value } => Ok((value - d).abs().powf(order)),
            _ => {
                self.discrete_index(var, d)?;
                let probs = self.probs().expect("discrete leaf");
                Ok(probs
                    .iter()
                    .enumerate()
                    .map(|(i, q)| q * (i as f64 - d).abs().powf(order))
                    .sum())
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            LeafDistribution::Bernoulli { p } => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            LeafDistribution::Categorical { probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (i, q) in probs.iter().enumerate() {
                    acc += q;
                    if u < acc {
                        return i as f64;
                    }
                }
                // Rounding left u above the cumulative total: take the last
                // index with positive mass.
                probs.iter().rposition(|q| *q > 0.0).unwrap_or(0) as f64
            }
            LeafDistribution::Gaussian { mu, sigma } => {
                Normal::new(*mu, *sigma).expect("validated sigma").sample(rng)
            }
            LeafDistribution::Dirac { value } => *value,
        }
    }
}
