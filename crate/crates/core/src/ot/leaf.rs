//! Closed-form optimal transport between univariate leaves.

use super::Matrix;
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;

#[derive(Debug, Clone, PartialEq)]
pub enum LeafPlan {
    /// Joint mass over the two integer supports.
    DiscreteJoint { table: Matrix },
    /// Deterministic map `y = a·x + b`.
    Affine { a: f64, b: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeafTransport {
    /// `W_p^p` between the two leaves.
    pub cost: f64,
    pub plan: LeafPlan,
}

/// Optimal `W_p^p` and plan between two leaves. Discrete leaves use the
/// comonotone coupling on their integer supports, which is optimal for every
/// convex ground cost; Gaussians are supported for order 2 only.
pub fn leaf_wasserstein(a: &LeafDistribution, b: &LeafDistribution, order: f64) -> Result<LeafTransport> {
    if !order.is_finite() || order < 1.0 {
        return Err(Error::UnsupportedPair(format!("order {order} must be finite and at least 1")));
    }
    match (a, b) {
        (LeafDistribution::Gaussian { mu: ma, sigma: sa }, LeafDistribution::Gaussian { mu: mb, sigma: sb }) => {
            if order != 2.0 {
                return Err(Error::UnsupportedPair(format!("gaussian leaves need order 2, got {order}")));
            }
            let scale = sb / sa;
            Ok(LeafTransport {
                cost: (ma - mb) * (ma - mb) + (sa - sb) * (sa - sb),
                plan: LeafPlan::Affine { a: scale, b: mb - ma * scale },
            })
        }
        _ if a.is_discrete() && b.is_discrete() => {
            let pa = a.probs().expect("discrete");
            let pb = b.probs().expect("discrete");
            Ok(comonotone(&pa, &pb, order))
        }
        _ => Err(Error::UnsupportedPair(format!("{} vs {}", a.kind_name(), b.kind_name()))),
    }
}

/// North-west corner merge of the two quantile functions.
fn comonotone(pa: &[f64], pb: &[f64], order: f64) -> LeafTransport {
    let mut table = Matrix::zeros(pa.len(), pb.len());
    let mut cost = 0.0;
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (pa[0], pb[0]);
    loop {
        let x = ra.min(rb);
        if x > 0.0 {
            table[(i, j)] += x;
            cost += x * (i as f64 - j as f64).abs().powf(order);
        }
        ra -= x;
        rb -= x;
        if i + 1 == pa.len() && j + 1 == pb.len() {
            break;
        }
        // Advance the exhausted side; the other side absorbs rounding.
        if (ra <= rb && i + 1 < pa.len()) || j + 1 == pb.len() {
            i += 1;
            ra = pa[i];
        } else {
            j += 1;
            rb = pb[j];
        }
    }
    LeafTransport { cost, plan: LeafPlan::DiscreteJoint { table } }
}
