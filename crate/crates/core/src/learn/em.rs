//! Full-batch expectation maximization, a likelihood baseline for WM.

use serde::{Deserialize, Serialize};

use super::cache::check_data;
use super::metrics::mean_log_likelihood;
use super::refit::{discrete_like, floored};
use crate::circuit::{Circuit, Node, NodeId};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::leaf::{LeafDistribution, PROB_FLOOR, SIGMA_FLOOR};
use crate::par::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EMConfig {
    pub iters: usize,
    pub sigma_floor: f64,
    pub prob_floor: f64,
}

impl Default for EMConfig {
    fn default() -> Self {
        EMConfig { iters: 50, sigma_floor: SIGMA_FLOOR, prob_floor: PROB_FLOOR }
    }
}

#[derive(Debug, Clone)]
pub struct EMFit {
    pub circuit: Circuit,
    /// Mean log-likelihood before the first step and after each step.
    pub trace: Vec<f64>,
}

/// Rows per parallel accumulation chunk; chunks are reduced in order.
const CHUNK: usize = 256;

/// Offsets of each node's block in the flat statistics vector: sums keep
/// one flow per child, Gaussian leaves `(w, wx, wxx)`, discrete leaves one
/// count per support point.
fn layout(c: &Circuit) -> (Vec<usize>, usize) {
    let mut offsets = Vec::with_capacity(c.len());
    let mut next = 0;
    for node in c.nodes() {
        offsets.push(next);
        next += match node {
            Node::Sum { children, .. } => children.len(),
            Node::Input { dist: LeafDistribution::Gaussian { .. }, .. } => 3,
            Node::Input { dist, .. } => dist.support_size().unwrap_or(0),
            Node::Product { .. } => 0,
        };
    }
    (offsets, next)
}

/// Expected sufficient statistics of one row, added into `stats`.
fn accumulate(c: &Circuit, offsets: &[usize], x: &[f64], k: usize, stats: &mut [f64]) -> Result<()> {
    let ll = c.upward_log(|var, dist| dist.log_density(var.index(), x[var.index()]))?;
    if ll[c.root().index()] == f64::NEG_INFINITY {
        return Err(Error::ZeroLikelihood(k));
    }
    let mut flow = vec![0.0; c.len()];
    flow[c.root().index()] = 1.0;
    for i in (0..c.len()).rev() {
        let f = flow[i];
        if f == 0.0 {
            continue;
        }
        let o = offsets[i];
        match c.node(NodeId::from(i)) {
            Node::Sum { children, weights } => {
                for (j, (ch, w)) in children.iter().zip(weights).enumerate() {
                    let share = f * w * (ll[ch.index()] - ll[i]).exp();
                    flow[ch.index()] += share;
                    stats[o + j] += share;
                }
            }
            Node::Product { children } => children.iter().for_each(|ch| flow[ch.index()] += f),
            Node::Input { var, dist } => {
                let v = x[var.index()];
                match dist {
                    LeafDistribution::Gaussian { .. } => {
                        stats[o] += f;
                        stats[o + 1] += f * v;
                        stats[o + 2] += f * v * v;
                    }
                    LeafDistribution::Dirac { .. } => {}
                    _ => stats[o + dist.discrete_index(var.index(), v)?] += f,
                }
            }
        }
    }
    Ok(())
}

fn em_step(c: &Circuit, data: &Dataset, cfg: &EMConfig) -> Result<Circuit> {
    let (offsets, width) = layout(c);
    let chunks = (0..data.len().div_ceil(CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut stats = vec![0.0; width];
            for k in ch * CHUNK..((ch + 1) * CHUNK).min(data.len()) {
                accumulate(c, &offsets, data.row(k), k, &mut stats)?;
            }
            Ok(stats)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut stats = vec![0.0; width];
    for chunk in &chunks {
        stats.iter_mut().zip(chunk).for_each(|(s, v)| *s += v);
    }

    let mut next = c.clone();
    for (i, node) in c.nodes().iter().enumerate() {
        let o = offsets[i];
        let id = NodeId::from(i);
        match node {
            Node::Sum { children, .. } => {
                let flows = &stats[o..o + children.len()];
                let total: f64 = flows.iter().sum();
                if total > 0.0 {
                    let theta = flows.iter().map(|f| f / total).collect();
                    next.set_sum_weights(id, floored_zeros(theta, cfg.prob_floor))?;
                }
            }
            Node::Input { dist: LeafDistribution::Gaussian { .. }, .. } => {
                let (w, wx, wxx) = (stats[o], stats[o + 1], stats[o + 2]);
                if w > 0.0 {
                    let mu = wx / w;
                    let sigma = (wxx / w - mu * mu).max(0.0).sqrt().max(cfg.sigma_floor);
                    next.set_leaf(id, LeafDistribution::Gaussian { mu, sigma })?;
                }
            }
            Node::Input { dist: LeafDistribution::Dirac { .. }, .. } | Node::Product { .. } => {}
            Node::Input { dist, .. } => {
                let counts = &stats[o..o + dist.support_size().expect("discrete leaf")];
                let total: f64 = counts.iter().sum();
                if total > 0.0 {
                    let probs = counts.iter().map(|c| c / total).collect();
                    next.set_leaf(id, discrete_like(dist, probs, cfg.prob_floor))?;
                }
            }
        }
    }
    Ok(next)
}

/// Only weights of edges that carried no flow are lifted to the floor, so
/// that each step stays a likelihood ascent step.
fn floored_zeros(theta: Vec<f64>, floor: f64) -> Vec<f64> {
    if theta.contains(&0.0) {
        floored(theta, floor)
    } else {
        theta
    }
}

/// Runs `cfg.iters` EM steps from the given parameters.
pub fn fit_em(c: &Circuit, data: &Dataset, cfg: &EMConfig) -> Result<EMFit> {
    fit_em_observed(c, data, cfg, |_, _| Ok(()))
}

/// [`fit_em`], calling `observe` with the circuit and its mean
/// log-likelihood before the first step and after every step.
pub fn fit_em_observed(
    c: &Circuit,
    data: &Dataset,
    cfg: &EMConfig,
    mut observe: impl FnMut(&Circuit, f64) -> Result<()>,
) -> Result<EMFit> {
    check_data(c, data)?;
    let mut circuit = c.clone();
    let mut trace = vec![mean_log_likelihood(&circuit, data)?];
    observe(&circuit, trace[0])?;
    for _ in 0..cfg.iters {
        circuit = em_step(&circuit, data, cfg)?;
        let ll = mean_log_likelihood(&circuit, data)?;
        observe(&circuit, ll)?;
        trace.push(ll);
    }
    Ok(EMFit { circuit, trace })
}
