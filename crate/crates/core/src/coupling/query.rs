//! Queries on a finished coupling: objective re-evaluation, joint mass,
//! conditioning on the source side, and transport maps.

use super::{CouplingCircuit, CouplingNode};
use crate::circuit::{Circuit, CircuitBuilder, NodeId};
use crate::circuit::VarId;
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;
use crate::math::log_sum_exp;
use crate::ot::LeafPlan;

/// Marginal violation tolerated by [`CouplingCircuit::cw_objective`].
pub const FEASIBILITY_TOLERANCE: f64 = 1e-6;

const ZERO_EVIDENCE: f64 = 1e-300;

impl CouplingCircuit {
    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.num_vars {
            return Err(Error::LengthMismatch(len, self.num_vars));
        }
        Ok(())
    }

    /// Expected `‖x − y‖_p^p` under the current weights, without
    /// re-optimizing. Fails if any sum node violates its marginals.
    pub fn cw_objective(&self) -> Result<f64> {
        let mut g: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                CouplingNode::Leaf { cost, .. } => *cost,
                CouplingNode::Product { children } => children.iter().map(|c| g[c.index()]).sum(),
                CouplingNode::Sum { children, weights, row_weights, col_weights } => {
                    let (rs, cs) = (weights.row_sums(), weights.col_sums());
                    let violation = rs
                        .iter()
                        .zip(row_weights)
                        .chain(cs.iter().zip(col_weights))
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    if violation > FEASIBILITY_TOLERANCE {
                        return Err(Error::InfeasibleWeights(violation));
                    }
                    children.iter().zip(weights.data()).map(|(c, w)| w * g[c.index()]).sum()
                }
            };
            g.push(v);
        }
        Ok(g[self.root.index()])
    }

    /// Joint mass `C(x, y)` of a discrete coupling; `x` is indexed by
    /// source variable and `y` by target variable.
    pub fn joint_probability(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_len(x.len())?;
        self.check_len(y.len())?;
        let mut val: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                CouplingNode::Leaf { x_var, y_var, source, target, plan: LeafPlan::DiscreteJoint { table }, .. } => {
                    let (xv, yv) = (x[x_var.index()], y[y_var.index()]);
                    // Density checks reject values outside the supports.
                    source.density(x_var.index(), xv)?;
                    target.density(y_var.index(), yv)?;
                    table[(xv as usize, yv as usize)]
                }
                CouplingNode::Leaf { .. } => {
                    return Err(Error::UnsupportedPair("joint mass of a continuous coupling".into()))
                }
                CouplingNode::Product { children } => children.iter().map(|c| val[c.index()]).product(),
                CouplingNode::Sum { children, weights, .. } => {
                    children.iter().zip(weights.data()).map(|(c, w)| w * val[c.index()]).sum()
                }
            };
            val.push(v);
        }
        Ok(val[self.root.index()])
    }

    /// Per-node `log C(x)`, the source-side marginal likelihood.
    fn source_log_likelihood(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut ll: Vec<f64> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                CouplingNode::Leaf { x_var, source, .. } => source.log_density(x_var.index(), x[x_var.index()])?,
                CouplingNode::Product { children } => children.iter().map(|c| ll[c.index()]).sum(),
                CouplingNode::Sum { children, weights, .. } => log_sum_exp(
                    children
                        .iter()
                        .zip(weights.data())
                        .filter(|(_, w)| **w > 0.0)
                        .map(|(c, w)| w.ln() + ll[c.index()])
                        .collect::<Vec<_>>(),
                ),
            };
            ll.push(v);
        }
        if ll[self.root.index()] < ZERO_EVIDENCE.ln() {
            return Err(Error::ZeroEvidence);
        }
        Ok(ll)
    }

    /// The circuit over the target variables representing `C(Y | X = x)`.
    /// Sum weights are reweighted by the children's source likelihoods and
    /// each leaf is replaced by its conditional.
    pub fn transport_condition(&self, x: &[f64]) -> Result<Circuit> {
        let ll = self.source_log_likelihood(x)?;
        let mut b = CircuitBuilder::new();
        for node in &self.nodes {
            match node {
                CouplingNode::Leaf { x_var, y_var, target, plan, .. } => {
                    b.input(y_var.index(), conditional_leaf(plan, target, x[x_var.index()]));
                }
                CouplingNode::Product { children } => {
                    b.product(children.clone());
                }
                CouplingNode::Sum { children, weights, .. } => {
                    let post = crate::circuit::posterior(weights.data(), children.iter().map(|c| ll[c.index()]));
                    // A sum unreachable under the evidence keeps its prior
                    // weights so the result stays a valid circuit.
                    let w = if post.iter().any(|p| *p > 0.0) { post } else { weights.data().to_vec() };
                    b.sum(children.clone(), w);
                }
            }
        }
        b.build(self.num_vars, self.root)
    }

    /// `E[Y | X = x]`, indexed by target variable.
    pub fn transport_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        let ll = self.source_log_likelihood(x)?;
        let v = self.num_vars;
        let mut moments: Vec<Vec<f64>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let mut m = vec![0.0; v];
            match node {
                CouplingNode::Leaf { x_var, y_var, target, plan, .. } => {
                    m[y_var.index()] = conditional_leaf(plan, target, x[x_var.index()]).mean();
                }
                CouplingNode::Product { children } => {
                    for c in children {
                        for (a, b) in m.iter_mut().zip(&moments[c.index()]) {
                            *a += b;
                        }
                    }
                }
                CouplingNode::Sum { children, weights, .. } => {
                    let post = crate::circuit::posterior(weights.data(), children.iter().map(|c| ll[c.index()]));
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

    /// Target variables in index order, for use with
    /// [`Circuit::conditional_expectation`] on a conditioned coupling.
    pub fn target_vars(&self) -> Vec<VarId> {
        (0..self.num_vars).map(VarId::from).collect()
    }

    /// Ids of sum nodes, in topological order.
    pub fn sum_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| matches!(n, CouplingNode::Sum { .. }))
            .map(|(i, _)| NodeId::from(i))
            .collect()
    }
}

/// Distribution of the target leaf given source value `x`.
fn conditional_leaf(plan: &LeafPlan, target: &LeafDistribution, x: f64) -> LeafDistribution {
    match plan {
        LeafPlan::Affine { a, b } => LeafDistribution::Dirac { value: a * x + b },
        LeafPlan::DiscreteJoint { table } => {
            let i = x as usize;
            let row = if i < table.rows() { table.row(i) } else { &[][..] };
            let total: f64 = row.iter().sum();
            if total <= 0.0 {
                return target.clone();
            }
            let probs: Vec<f64> = row.iter().map(|p| p / total).collect();
            match target {
                LeafDistribution::Bernoulli { .. } => LeafDistribution::Bernoulli { p: probs[1] },
                _ => LeafDistribution::Categorical { probs },
            }
        }
    }
}

/// `x + t·(y − x)`. Panics if the lengths differ.
pub fn geodesic_point(x: &[f64], y: &[f64], t: f64) -> Vec<f64> {
    assert_eq!(x.len(), y.len(), "geodesic endpoints differ in length");
    x.iter().zip(y).map(|(a, b)| a + t * (b - a)).collect()
}
