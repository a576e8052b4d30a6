//! Bottom-up queries: likelihoods, marginals and conditional expectations.

use super::{Circuit, Node, VarId};
use crate::error::{Error, Result};
use crate::math::weighted_log_sum_exp;

/// Evidence likelihood below which conditioning is refused.
const ZERO_EVIDENCE: f64 = 1e-300;

impl Circuit {
    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_vars {
            return Err(Error::LengthMismatch(len, self.num_vars));
        }
        Ok(())
    }

    /// Per-node log values given a log-value for each input node.
    pub(crate) fn upward_log(&self, mut leaf: impl FnMut(VarId, &crate::leaf::LeafDistribution) -> Result<f64>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                Node::Input { var, dist } => leaf(*var, dist)?,
                Node::Product { children } => children.iter().map(|c| out[c.index()]).sum(),
                Node::Sum { children, weights } => {
                    weighted_log_sum_exp(weights, children.iter().map(|c| out[c.index()]))
                }
            };
            out.push(v);
        }
        Ok(out)
    }

    /// Per-node log-likelihood of partial evidence (`None` marginalizes).
    pub fn log_likelihoods(&self, evidence: &[Option<f64>]) -> Result<Vec<f64>> {
        self.check_len(evidence.len())?;
        self.upward_log(|var, dist| match evidence[var.index()] {
            Some(x) => dist.log_density(var.index(), x),
            None => Ok(0.0),
        })
    }

    /// `p(x)` for a complete assignment, in linear space.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        let mut out = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                Node::Input { var, dist } => dist.density(var.index(), x[var.index()])?,
                Node::Product { children } => children.iter().map(|c| out[c.index()]).product(),
                Node::Sum { children, weights } => {
                    children.iter().zip(weights).map(|(c, w)| w * out[c.index()]).sum()
                }
            };
            out.push(v);
        }
        Ok(out[self.root.index()])
    }

    /// `log p(x)` for a complete assignment.
    pub fn log_evaluate(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        let values = self.upward_log(|var, dist| dist.log_density(var.index(), x[var.index()]))?;
        Ok(values[self.root.index()])
    }

    /// Probability (or density) of partial evidence with unassigned
    /// variables integrated out.
    pub fn marginal(&self, partial: &[Option<f64>]) -> Result<f64> {
        Ok(self.log_marginal(partial)?.exp())
    }

    pub fn log_marginal(&self, partial: &[Option<f64>]) -> Result<f64> {
        self.require_smooth_decomposable()?;
        Ok(self.log_likelihoods(partial)?[self.root.index()])
    }

    /// `E[X_t | evidence]` for each target variable `t`.
    pub fn conditional_expectation(&self, evidence: &[Option<f64>], targets: &[VarId]) -> Result<Vec<f64>> {
        self.require_smooth_decomposable()?;
        self.check_len(evidence.len())?;
        let mut slot = vec![usize::MAX; self.num_vars];
        for (i, t) in targets.iter().enumerate() {
            if t.index() >= self.num_vars {
                return Err(Error::LengthMismatch(t.index(), self.num_vars));
            }
            if evidence[t.index()].is_some() {
                return Err(Error::InvalidCircuit(format!("variable {t} is both evidence and target")));
            }
            slot[t.index()] = i;
        }
        let loglik = self.log_likelihoods(evidence)?;
        if loglik[self.root.index()] < ZERO_EVIDENCE.ln() {
            return Err(Error::ZeroEvidence);
        }
        let t = targets.len();
        let mut moments: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut m = vec![0.0; t];
            match node {
                Node::Input { var, dist } => {
                    if slot[var.index()] != usize::MAX {
                        m[slot[var.index()]] = dist.mean();
                    }
                }
                Node::Product { children } => {
                    for c in children {
                        for (a, b) in m.iter_mut().zip(&moments[c.index()]) {
                            *a += b;
                        }
                    }
                }
                Node::Sum { children, weights } => {
                    let post = posterior(weights, children.iter().map(|c| loglik[c.index()]));
                    for (c, w) in children.iter().zip(post) {
                        if w > 0.0 {
                            for (a, b) in m.iter_mut().zip(&moments[c.index()]) {
                                *a += w * b;
                            }
                        }
                    }
                }
            }
            moments.push(m);
        }
        Ok(moments.swap_remove(self.root.index()))
    }
}

/// Normalized `θ_c · exp(ll_c)`; all zeros when every term vanishes.
pub fn posterior(weights: &[f64], logs: impl Iterator<Item = f64>) -> Vec<f64> {
    let terms: Vec<f64> = weights
        .iter()
        .zip(logs)
        .map(|(w, l)| if *w > 0.0 { w.ln() + l } else { f64::NEG_INFINITY })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return vec![0.0; terms.len()];
    }
    let exp: Vec<f64> = terms.iter().map(|t| (t - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}
