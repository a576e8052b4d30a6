//! Optimal coupling circuits between compatible circuits.
//!
//! Node pairs are discovered top-down from the two roots and memoized, then
//! solved bottom-up one height level at a time: input pairs take the
//! closed-form leaf plan, product pairs add their children's costs, and sum
//! pairs solve a transportation problem whose costs are the optimal costs of
//! the coupled child pairs.

mod json;
mod query;

use std::collections::HashMap;

use crate::circuit::{Circuit, Node, NodeId, Scope, VarId};
use crate::compat::{check_compatible, VariableBijection};
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;
use crate::ot::{leaf_wasserstein, solve_transportation, LeafPlan, Matrix, TransportationProblem};
use crate::par::*;

pub use query::geodesic_point;

#[derive(Debug, Clone, PartialEq)]
pub enum CouplingNode {
    /// Couples every child of one sum with every child of the other.
    /// `children` and `weights` are row-major over (row, column) pairs.
    Sum {
        children: Vec<NodeId>,
        weights: Matrix,
        row_weights: Vec<f64>,
        col_weights: Vec<f64>,
    },
    /// Couples corresponding children of two products.
    Product { children: Vec<NodeId> },
    /// Univariate plan between an X leaf and a Y leaf.
    Leaf {
        x_var: VarId,
        y_var: VarId,
        source: LeafDistribution,
        target: LeafDistribution,
        plan: LeafPlan,
        cost: f64,
    },
}

impl CouplingNode {
    pub fn children(&self) -> &[NodeId] {
        match self {
            CouplingNode::Sum { children, .. } | CouplingNode::Product { children } => children,
            CouplingNode::Leaf { .. } => &[],
        }
    }
}

/// A circuit over `X ∪ Y` whose marginals are the two coupled circuits.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingCircuit {
    nodes: Vec<CouplingNode>,
    provenance: Vec<(NodeId, NodeId)>,
    optimal_cost: Vec<f64>,
    root: NodeId,
    order: f64,
    num_vars: usize,
}

impl CouplingCircuit {
    pub fn nodes(&self) -> &[CouplingNode] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &CouplingNode {
        &self.nodes[id.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of variables on each side.
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    /// The `(p, q)` node pair each coupling node couples.
    pub fn provenance(&self) -> &[(NodeId, NodeId)] {
        &self.provenance
    }

    /// Optimal expected cost of the sub-coupling rooted at `id`.
    pub fn optimal_cost(&self, id: NodeId) -> f64 {
        self.optimal_cost[id.index()]
    }

    pub fn is_discrete(&self) -> bool {
        self.nodes.iter().all(|n| !matches!(n, CouplingNode::Leaf { plan: LeafPlan::Affine { .. }, .. }))
    }

    /// Replaces the joint weights of a sum node. Shape and sign are checked
    /// here; marginal constraints are checked by [`Self::cw_objective`].
    pub fn set_sum_weights(&mut self, id: NodeId, plan: Matrix) -> Result<()> {
        match &mut self.nodes[id.index()] {
            CouplingNode::Sum { weights, .. } => {
                if (plan.rows(), plan.cols()) != (weights.rows(), weights.cols()) {
                    return Err(Error::LengthMismatch(plan.data().len(), weights.data().len()));
                }
                if plan.data().iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return Err(Error::InfeasibleWeights(f64::INFINITY));
                }
                *weights = plan;
                Ok(())
            }
            _ => Err(Error::InvalidCircuit(format!("coupling node {id} is not a sum node"))),
        }
    }
}

/// Result of [`couple`].
#[derive(Debug, Clone, PartialEq)]
pub struct CWResult {
    /// `CW_p^p`, the optimized expected cost.
    pub distance_p_power: f64,
    pub order: f64,
    pub coupling: CouplingCircuit,
}

impl CWResult {
    /// `CW_p`, the metric.
    pub fn distance(&self) -> f64 {
        self.distance_p_power.max(0.0).powf(1.0 / self.order)
    }
}

type Pair = (NodeId, NodeId);

/// Children of a node pair before its cost is known.
enum Shape {
    Sum { rows: usize, cols: usize, pairs: Vec<Pair>, row_weights: Vec<f64>, col_weights: Vec<f64> },
    Product { pairs: Vec<Pair> },
    Leaf { x_var: VarId, y_var: VarId, source: LeafDistribution, target: LeafDistribution },
}

impl Shape {
    fn pairs(&self) -> &[Pair] {
        match self {
            Shape::Sum { pairs, .. } | Shape::Product { pairs } => pairs,
            Shape::Leaf { .. } => &[],
        }
    }
}

/// Sum children and weights, treating a non-sum node as a one-child sum.
fn mixture_view(c: &Circuit, id: NodeId) -> (Vec<NodeId>, Vec<f64>) {
    match c.node(id) {
        Node::Sum { children, weights } => (children.clone(), weights.clone()),
        _ => (vec![id], vec![1.0]),
    }
}

fn shape(p: &Circuit, q: &Circuit, bij: &VariableBijection, a: NodeId, b: NodeId) -> Result<Shape> {
    let mapped = p.scope(a).map(|v| bij.apply(v));
    if &mapped != q.scope(b) {
        return Err(Error::ScopeMismatch(format!("p{a} and q{b} have non-corresponding scopes")));
    }
    let (na, nb) = (p.node(a), q.node(b));
    if na.is_sum() || nb.is_sum() {
        let (pc, row_weights) = mixture_view(p, a);
        let (qc, col_weights) = mixture_view(q, b);
        let pairs = pc.iter().flat_map(|x| qc.iter().map(move |y| (*x, *y))).collect();
        return Ok(Shape::Sum { rows: pc.len(), cols: qc.len(), pairs, row_weights, col_weights });
    }
    match (na, nb) {
        (Node::Product { children }, _) if children.len() == 1 => Ok(Shape::Product { pairs: vec![(children[0], b)] }),
        (_, Node::Product { children }) if children.len() == 1 => Ok(Shape::Product { pairs: vec![(a, children[0])] }),
        (Node::Product { children: pc }, Node::Product { children: qc }) => {
            let by_scope: HashMap<&Scope, NodeId> = qc.iter().map(|c| (q.scope(*c), *c)).collect();
            if pc.len() != qc.len() || by_scope.len() != qc.len() {
                return Err(Error::NotCompatible { p: a, q: b });
            }
            let pairs = pc
                .iter()
                .map(|c| {
                    let s = p.scope(*c).map(|v| bij.apply(v));
                    by_scope.get(&s).map(|qcid| (*c, *qcid)).ok_or(Error::NotCompatible { p: a, q: b })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Shape::Product { pairs })
        }
        (Node::Input { var: x_var, dist: source }, Node::Input { var: y_var, dist: target }) => Ok(Shape::Leaf {
            x_var: *x_var,
            y_var: *y_var,
            source: source.clone(),
            target: target.clone(),
        }),
        _ => Err(Error::NotCompatible { p: a, q: b }),
    }
}

/// Pairs in post-order, their shapes, and each pair's position.
type Discovered = (Vec<Pair>, Vec<Shape>, HashMap<Pair, usize>);

/// Reachable node pairs in post-order (children before parents).
fn discover(p: &Circuit, q: &Circuit, bij: &VariableBijection) -> Result<Discovered> {
    let mut index: HashMap<Pair, usize> = HashMap::new();
    let mut pairs = Vec::new();
    let mut shapes = Vec::new();
    let mut stack: Vec<(Pair, Option<Shape>)> = vec![((p.root(), q.root()), None)];
    while let Some((pair, frame)) = stack.last_mut() {
        let pair = *pair;
        if index.contains_key(&pair) {
            stack.pop();
            continue;
        }
        match frame.take() {
            None => {
                let s = shape(p, q, bij, pair.0, pair.1)?;
                let pending: Vec<Pair> = s.pairs().iter().rev().filter(|c| !index.contains_key(c)).copied().collect();
                *frame = Some(s);
                stack.extend(pending.into_iter().map(|c| (c, None)));
            }
            Some(s) => {
                stack.pop();
                index.insert(pair, pairs.len());
                pairs.push(pair);
                shapes.push(s);
            }
        }
    }
    Ok((pairs, shapes, index))
}

/// Builds the optimal coupling circuit of `p` and `q` and returns `CW_p^p`.
pub fn couple(p: &Circuit, q: &Circuit, bij: &VariableBijection, order: f64) -> Result<CWResult> {
    if !order.is_finite() || order < 1.0 {
        return Err(Error::UnsupportedPair(format!("order {order} must be finite and at least 1")));
    }
    check_compatible(p, q, bij)?.into_result()?;
    let (pairs, shapes, index) = discover(p, q, bij)?;
    let child_ids: Vec<Vec<usize>> = shapes.iter().map(|s| s.pairs().iter().map(|c| index[c]).collect()).collect();

    let mut height = vec![0usize; pairs.len()];
    for id in 0..pairs.len() {
        height[id] = child_ids[id].iter().map(|c| height[*c] + 1).max().unwrap_or(0);
    }
    let levels = height.iter().max().map_or(0, |h| h + 1);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for (id, h) in height.iter().enumerate() {
        by_level[*h].push(id);
    }

    let mut cost = vec![f64::NAN; pairs.len()];
    let mut nodes: Vec<Option<CouplingNode>> = vec![None; pairs.len()];
    for level in &by_level {
        let solved: Vec<(usize, f64, CouplingNode)> = level
            .par_iter()
            .map(|&id| {
                let children: Vec<NodeId> = child_ids[id].iter().map(|c| NodeId::from(*c)).collect();
                let (g, node) = solve_pair(&shapes[id], children, &child_ids[id], &cost, order)?;
                Ok((id, g, node))
            })
            .collect::<Result<Vec<_>>>()?;
        for (id, g, node) in solved {
            cost[id] = g;
            nodes[id] = Some(node);
        }
    }
    let root = NodeId::from(pairs.len() - 1);
    let distance_p_power = cost[root.index()];
    let coupling = CouplingCircuit {
        nodes: nodes.into_iter().map(|n| n.expect("every level solved")).collect(),
        provenance: pairs,
        optimal_cost: cost,
        root,
        order,
        num_vars: p.num_vars(),
    };
    Ok(CWResult { distance_p_power, order, coupling })
}

fn solve_pair(shape: &Shape, children: Vec<NodeId>, child_ids: &[usize], cost: &[f64], order: f64) -> Result<(f64, CouplingNode)> {
    match shape {
        Shape::Leaf { x_var, y_var, source, target } => {
            let t = leaf_wasserstein(source, target, order)?;
            Ok((
                t.cost,
                CouplingNode::Leaf {
                    x_var: *x_var,
                    y_var: *y_var,
                    source: source.clone(),
                    target: target.clone(),
                    plan: t.plan,
                    cost: t.cost,
                },
            ))
        }
        Shape::Product { .. } => {
            let g = child_ids.iter().map(|c| cost[*c]).sum();
            Ok((g, CouplingNode::Product { children }))
        }
        Shape::Sum { rows, cols, row_weights, col_weights, .. } => {
            let c = Matrix::from_vec(*rows, *cols, child_ids.iter().map(|c| cost[*c]).collect());
            let tp = TransportationProblem::new(row_weights.clone(), col_weights.clone(), c)?;
            let sol = solve_transportation(&tp)?;
            Ok((
                sol.objective,
                CouplingNode::Sum {
                    children,
                    weights: sol.plan,
                    row_weights: row_weights.clone(),
                    col_weights: col_weights.clone(),
                },
            ))
        }
    }
}
