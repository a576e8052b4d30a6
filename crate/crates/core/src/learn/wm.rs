//! Wasserstein minimization: route each datapoint down one path of the
//! circuit, then refit parameters to the routed data.

use log::warn;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cache::{check_data, inference_pass, DistanceCache};
use super::refit::{floored, refit, Floors, LeafUpdate};
use crate::circuit::{Circuit, Node, NodeId};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::leaf::{PROB_FLOOR, SIGMA_FLOOR};
use crate::par::*;
use crate::rng::SeedTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WMConfig {
    pub order: f64,
    /// Per sum node and datapoint, the probability of routing to a
    /// uniformly random child instead of the cheapest one.
    pub stochastic_p: f64,
    pub max_iters: usize,
    /// Stop once the relative ECW change falls below this.
    pub rel_tol: f64,
    pub seed: u64,
    pub sigma_floor: f64,
    pub prob_floor: f64,
    pub leaf_update: LeafUpdate,
}

impl Default for WMConfig {
    fn default() -> Self {
        WMConfig {
            order: 2.0,
            stochastic_p: 0.0,
            max_iters: 100,
            rel_tol: 1e-6,
            seed: 0,
            sigma_floor: SIGMA_FLOOR,
            prob_floor: PROB_FLOOR,
            leaf_update: LeafUpdate::MomentMatch,
        }
    }
}

impl WMConfig {
    /// Preset for the randomized variant.
    pub fn stochastic() -> Self {
        WMConfig { stochastic_p: 0.1, ..WMConfig::default() }
    }

    fn check(&self) -> Result<()> {
        if self.order.is_nan() || self.order < 1.0 {
            return Err(Error::UnsupportedPair(format!("order must be at least 1, got {}", self.order)));
        }
        if !(0.0..=1.0).contains(&self.stochastic_p) {
            return Err(Error::InvalidCircuit(format!("stochastic_p {} outside [0, 1]", self.stochastic_p)));
        }
        Ok(())
    }

    fn floors(&self) -> Floors {
        Floors { sigma: self.sigma_floor, prob: self.prob_floor }
    }
}

/// Which child each datapoint was routed to at each sum node it reached.
/// Every datapoint carries mass `1/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingTable {
    num_data: usize,
    /// Slot of each node in `choices`, for sum nodes.
    slot: Vec<Option<usize>>,
    arity: Vec<usize>,
    choices: Vec<Vec<Option<u32>>>,
}

impl RoutingTable {
    fn new(c: &Circuit, num_data: usize) -> Self {
        let mut slot = vec![None; c.len()];
        let mut arity = Vec::new();
        for (i, node) in c.nodes().iter().enumerate() {
            if let Node::Sum { children, .. } = node {
                slot[i] = Some(arity.len());
                arity.push(children.len());
            }
        }
        let choices = vec![vec![None; num_data]; arity.len()];
        RoutingTable { num_data, slot, arity, choices }
    }

    fn slot_of(&self, sum: NodeId) -> usize {
        self.slot[sum.index()].expect("sum node")
    }

    pub fn num_data(&self) -> usize {
        self.num_data
    }

    pub fn mass(&self) -> f64 {
        1.0 / self.num_data as f64
    }

    /// Child index datapoint `k` took at `sum`, if it reached `sum`.
    pub fn choice(&self, sum: NodeId, k: usize) -> Option<usize> {
        self.choices[self.slot_of(sum)][k].map(|c| c as usize)
    }

    /// Routing weight `w_{sum, child, k}`.
    pub fn weight(&self, sum: NodeId, child: usize, k: usize) -> f64 {
        if self.choice(sum, k) == Some(child) {
            self.mass()
        } else {
            0.0
        }
    }

    /// Mass of datapoint `k` arriving at `sum`.
    pub fn arriving_mass(&self, sum: NodeId, k: usize) -> f64 {
        if self.choice(sum, k).is_some() {
            self.mass()
        } else {
            0.0
        }
    }

    /// `Σ_k w_{sum, c, k}` for every child `c`.
    pub fn child_mass(&self, sum: NodeId) -> Vec<f64> {
        let s = self.slot_of(sum);
        let mut mass = vec![0.0; self.arity[s]];
        for c in self.choices[s].iter().flatten() {
            mass[*c as usize] += self.mass();
        }
        mass
    }
}

struct Route {
    sums: Vec<(u32, u32)>,
    leaves: Vec<u32>,
}

/// Path of datapoint `k`: cheapest routed child at each sum, lowest index
/// on ties, or a uniform child with probability `stochastic_p`.
fn route_one(c: &Circuit, cache: &DistanceCache, k: usize, cfg: &WMConfig) -> Route {
    let routed = cache.routed_row(k);
    let mut rng = (cfg.stochastic_p > 0.0).then(|| SeedTree::new(cfg.seed).child("route").stream(k as u64));
    let mut route = Route { sums: Vec::new(), leaves: Vec::new() };
    let mut stack = vec![c.root()];
    while let Some(id) = stack.pop() {
        match c.node(id) {
            Node::Input { .. } => route.leaves.push(id.0),
            Node::Product { children } => stack.extend(children.iter().rev()),
            Node::Sum { children, .. } => {
                let random = rng.as_mut().and_then(|r| {
                    (r.random::<f64>() < cfg.stochastic_p).then(|| r.random_range(0..children.len()))
                });
                let pick = random.unwrap_or_else(|| {
                    (1..children.len()).fold(0, |best, i| {
                        if routed[children[i].index()] < routed[children[best].index()] {
                            i
                        } else {
                            best
                        }
                    })
                });
                route.sums.push((id.0, pick as u32));
                stack.push(children[pick]);
            }
        }
    }
    route
}

/// One WM step: route every datapoint using `cache`, set sum weights to
/// the routed mass fractions and refit leaves to their routed values.
///
/// Children that receive no data get weight `prob_floor` before
/// renormalization; unreached nodes keep their parameters.
pub fn learn_pass(
    c: &Circuit,
    data: &Dataset,
    cache: &DistanceCache,
    cfg: &WMConfig,
) -> Result<(Circuit, RoutingTable)> {
    cfg.check()?;
    check_data(c, data)?;
    if cache.num_data() != data.len() {
        return Err(Error::LengthMismatch(cache.num_data(), data.len()));
    }
    let routes: Vec<Route> = (0..data.len()).into_par_iter().map(|k| route_one(c, cache, k, cfg)).collect();

    let mut table = RoutingTable::new(c, data.len());
    let mut leaf_rows: Vec<Vec<usize>> = vec![Vec::new(); c.len()];
    for (k, route) in routes.iter().enumerate() {
        for &(sum, child) in &route.sums {
            let s = table.slot_of(NodeId(sum));
            table.choices[s][k] = Some(child);
        }
        for &leaf in &route.leaves {
            leaf_rows[leaf as usize].push(k);
        }
    }

    let mut next = c.clone();
    let mut empty = 0usize;
    for (i, node) in c.nodes().iter().enumerate() {
        let id = NodeId::from(i);
        match node {
            Node::Sum { .. } => {
                let mass = table.child_mass(id);
                let total: f64 = mass.iter().sum();
                if total > 0.0 {
                    empty += mass.iter().filter(|m| **m == 0.0).count();
                    let theta = mass.iter().map(|m| m / total).collect();
                    next.set_sum_weights(id, floored(theta, cfg.prob_floor))?;
                }
            }
            Node::Input { var, dist } if !leaf_rows[i].is_empty() => {
                let values: Vec<f64> = leaf_rows[i].iter().map(|&k| data.row(k)[var.index()]).collect();
                next.set_leaf(id, refit(dist, var.index(), &values, cfg.leaf_update, cfg.order, cfg.floors())?)?;
            }
            _ => {}
        }
    }
    if empty > 0 {
        warn!("{empty} sum edges received no data and were floored");
    }
    Ok((next, table))
}

/// Mean cost of the cheapest per-datapoint routing under the current
/// parameters.
pub fn ecw(c: &Circuit, data: &Dataset, order: f64) -> Result<f64> {
    Ok(inference_pass(c, data, order)?.ecw())
}

#[derive(Debug, Clone)]
pub struct WMFit {
    pub circuit: Circuit,
    /// ECW before the first step.
    pub initial_ecw: f64,
    /// ECW after each step.
    pub trace: Vec<f64>,
    /// True if a stopping rule fired before `max_iters`.
    pub converged: bool,
}

/// Alternates inference and learn passes until the ECW change drops below
/// `rel_tol`, the routing stops changing (deterministic mode), or
/// `max_iters` is reached.
pub fn fit_wm(c: &Circuit, data: &Dataset, cfg: &WMConfig) -> Result<WMFit> {
    fit_wm_observed(c, data, cfg, |_, _| Ok(()))
}

/// [`fit_wm`], calling `observe` with the circuit and its ECW before the
/// first step and after every step.
pub fn fit_wm_observed(
    c: &Circuit,
    data: &Dataset,
    cfg: &WMConfig,
    mut observe: impl FnMut(&Circuit, f64) -> Result<()>,
) -> Result<WMFit> {
    cfg.check()?;
    let seeds = SeedTree::new(cfg.seed).child("wm");
    let mut circuit = c.clone();
    let mut cache = inference_pass(&circuit, data, cfg.order)?;
    let initial_ecw = cache.ecw();
    observe(&circuit, initial_ecw)?;
    let mut trace = Vec::new();
    let mut previous_routing: Option<RoutingTable> = None;
    let mut previous = initial_ecw;
    let mut converged = false;
    for it in 0..cfg.max_iters {
        let step_cfg = WMConfig { seed: seeds.index(it as u64).seed(), ..cfg.clone() };
        let (next, routing) = learn_pass(&circuit, data, &cache, &step_cfg)?;
        circuit = next;
        cache = inference_pass(&circuit, data, cfg.order)?;
        let value = cache.ecw();
        observe(&circuit, value)?;
        trace.push(value);
        let stable = cfg.stochastic_p == 0.0 && previous_routing.as_ref() == Some(&routing);
        let small = (previous - value).abs() <= cfg.rel_tol * previous.abs();
        previous = value;
        previous_routing = Some(routing);
        if stable || small {
            converged = true;
            break;
        }
    }
    Ok(WMFit { circuit, initial_ecw, trace, converged })
}
