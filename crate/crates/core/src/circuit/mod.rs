//! Probabilistic circuits: rooted DAGs of sum, product and input nodes.
//!
//! Nodes are stored child-before-parent, so every bottom-up pass is a single
//! forward sweep over the node array and every top-down pass a backward one.

mod inference;
mod json;
mod sample;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leaf::{LeafDistribution, WEIGHT_TOLERANCE};

pub use inference::posterior;
pub use json::CircuitJson;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(u32::try_from(i).expect("node index fits in u32"))
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for VarId {
    fn from(i: usize) -> Self {
        VarId(u32::try_from(i).expect("variable index fits in u32"))
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Sorted, duplicate-free set of variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Scope(Vec<VarId>);

impl Scope {
    pub fn singleton(v: VarId) -> Self {
        Scope(vec![v])
    }

    pub fn from_vars(vars: impl IntoIterator<Item = VarId>) -> Self {
        let mut v: Vec<VarId> = vars.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Scope(v)
    }

    pub fn vars(&self) -> &[VarId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: VarId) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_disjoint(&self, other: &Scope) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn union(&self, other: &Scope) -> Scope {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < other.0.len() {
            let next = match (self.0.get(i), other.0.get(j)) {
                (Some(a), Some(b)) if a < b => {
                    i += 1;
                    *a
                }
                (Some(a), Some(b)) if b < a => {
                    j += 1;
                    *b
                }
                (Some(a), Some(_)) => {
                    i += 1;
                    j += 1;
                    *a
                }
                (Some(a), None) => {
                    i += 1;
                    *a
                }
                (None, Some(b)) => {
                    j += 1;
                    *b
                }
                (None, None) => unreachable!(),
            };
            out.push(next);
        }
        Scope(out)
    }

    /// Image of the scope under a variable map.
    pub fn map(&self, f: impl Fn(VarId) -> VarId) -> Scope {
        Scope::from_vars(self.0.iter().map(|v| f(*v)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Sum { children: Vec<NodeId>, weights: Vec<f64> },
    Product { children: Vec<NodeId> },
    Input { var: VarId, dist: LeafDistribution },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Sum { children, .. } | Node::Product { children } => children,
            Node::Input { .. } => &[],
        }
    }

    pub fn is_sum(&self) -> bool {
        matches!(self, Node::Sum { .. })
    }
}

/// Structural properties computed at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    /// First sum node whose children do not all share its scope.
    pub non_smooth: Option<NodeId>,
    /// First product node with overlapping child scopes.
    pub non_decomposable: Option<NodeId>,
}

impl ValidationReport {
    pub fn smooth(&self) -> bool {
        self.non_smooth.is_none()
    }

    pub fn decomposable(&self) -> bool {
        self.non_decomposable.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_vars: usize,
    nodes: Vec<Node>,
    root: NodeId,
    scopes: Vec<Scope>,
    report: ValidationReport,
}

impl Circuit {
    /// Builds and validates a circuit. Children must precede their parents,
    /// every node must be reachable from `root`, and the root scope must be
    /// all of `0..num_vars`. Sum weights within tolerance of the simplex are
    /// renormalized once here.
    pub fn new(num_vars: usize, mut nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        let n = nodes.len();
        if root.index() >= n {
            return Err(Error::InvalidCircuit(format!("root {root} out of range")));
        }
        for (i, node) in nodes.iter().enumerate() {
            let id = NodeId::from(i);
            if let Some(c) = node.children().iter().find(|c| c.index() >= n) {
                return Err(Error::InvalidCircuit(format!("node {id} references missing child {c}")));
            }
            if !matches!(node, Node::Input { .. }) && node.children().is_empty() {
                return Err(Error::EmptyChildren(id));
            }
        }
        if let Some(i) = (0..n).find(|&i| nodes[i].children().iter().any(|c| c.index() >= i)) {
            return Err(match find_cycle(&nodes) {
                Some(c) => Error::Cycle(c),
                None => Error::InvalidCircuit(format!(
                    "node {i} precedes one of its children; nodes must be topologically ordered"
                )),
            });
        }
        for (i, node) in nodes.iter_mut().enumerate() {
            match node {
                Node::Sum { children, weights } => {
                    *weights = checked_weights(NodeId::from(i), children.len(), weights)?;
                }
                Node::Input { var, dist } => {
                    if var.index() >= num_vars {
                        return Err(Error::InvalidCircuit(format!(
                            "input node {i} uses variable {var} but num_vars is {num_vars}"
                        )));
                    }
                    *dist = dist.clone().validated()?;
                }
                Node::Product { .. } => {}
            }
        }
        let mut reachable = vec![false; n];
        reachable[root.index()] = true;
        for i in (0..n).rev() {
            if reachable[i] {
                for c in nodes[i].children() {
                    reachable[c.index()] = true;
                }
            }
        }
        if let Some(i) = reachable.iter().position(|r| !r) {
            return Err(Error::InvalidCircuit(format!("node {i} is unreachable from the root")));
        }

        let mut scopes: Vec<Scope> = Vec::with_capacity(n);
        let mut report = ValidationReport { non_smooth: None, non_decomposable: None };
        for (i, node) in nodes.iter().enumerate() {
            let scope = match node {
                Node::Input { var, .. } => Scope::singleton(*var),
                Node::Sum { children, .. } => {
                    let first = &scopes[children[0].index()];
                    let mut scope = first.clone();
                    for c in &children[1..] {
                        let cs = &scopes[c.index()];
                        if cs != first {
                            report.non_smooth.get_or_insert(NodeId::from(i));
                            scope = scope.union(cs);
                        }
                    }
                    scope
                }
                Node::Product { children } => {
                    let mut scope = Scope::default();
                    for c in children {
                        let cs = &scopes[c.index()];
                        if !scope.is_disjoint(cs) {
                            report.non_decomposable.get_or_insert(NodeId::from(i));
                        }
                        scope = scope.union(cs);
                    }
                    scope
                }
            };
            scopes.push(scope);
        }
        let root_scope = &scopes[root.index()];
        if root_scope.len() != num_vars {
            return Err(Error::InvalidCircuit(format!(
                "root scope covers {} of {num_vars} variables",
                root_scope.len()
            )));
        }
        Ok(Circuit { num_vars, nodes, root, scopes, report })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
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

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.index()]
    }

    pub fn scope(&self, id: NodeId) -> &Scope {
        &self.scopes[id.index()]
    }

    pub fn validation(&self) -> &ValidationReport {
        &self.report
    }

    /// Total number of child edges.
    pub fn num_edges(&self) -> usize {
        self.nodes.iter().map(|n| n.children().len()).sum()
    }

    /// Number of weighted (sum-node) edges, i.e. the mixture parameters.
    pub fn num_sum_edges(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| n.is_sum())
            .map(|n| n.children().len())
            .sum()
    }

    pub fn is_discrete(&self) -> bool {
        self.nodes.iter().all(|n| match n {
            Node::Input { dist, .. } => dist.is_discrete(),
            _ => true,
        })
    }

    /// Support size of each variable, taking the largest over its leaves.
    /// `None` if any leaf is not discrete.
    pub fn discrete_support(&self) -> Option<Vec<usize>> {
        let mut sizes = vec![0usize; self.num_vars];
        for node in &self.nodes {
            if let Node::Input { var, dist } = node {
                let m = dist.support_size()?;
                sizes[var.index()] = sizes[var.index()].max(m);
            }
        }
        Some(sizes)
    }

    pub fn require_smooth_decomposable(&self) -> Result<()> {
        if !self.report.smooth() {
            return Err(Error::Structure("smooth"));
        }
        if !self.report.decomposable() {
            return Err(Error::Structure("decomposable"));
        }
        Ok(())
    }

    /// Replaces the weights of a sum node, keeping the structure.
    pub fn set_sum_weights(&mut self, id: NodeId, new_weights: Vec<f64>) -> Result<()> {
        match &mut self.nodes[id.index()] {
            Node::Sum { children, weights } => {
                *weights = checked_weights(id, children.len(), &new_weights)?;
                Ok(())
            }
            _ => Err(Error::InvalidCircuit(format!("node {id} is not a sum node"))),
        }
    }

    /// Replaces the distribution of an input node, keeping its variable.
    pub fn set_leaf(&mut self, id: NodeId, new_dist: LeafDistribution) -> Result<()> {
        match &mut self.nodes[id.index()] {
            Node::Input { dist, .. } => {
                *dist = new_dist.validated()?;
                Ok(())
            }
            _ => Err(Error::InvalidCircuit(format!("node {id} is not an input node"))),
        }
    }
}

fn checked_weights(id: NodeId, arity: usize, weights: &[f64]) -> Result<Vec<f64>> {
    if weights.len() != arity {
        return Err(Error::InvalidCircuit(format!(
            "sum node {id} has {arity} children but {} weights",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidCircuit(format!("sum node {id} has a negative or non-finite weight")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidCircuit(format!("sum node {id} weights sum to {total}")));
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

/// Any node on a directed cycle, found by iterative DFS.
fn find_cycle(nodes: &[Node]) -> Option<NodeId> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; nodes.len()];
    for start in 0..nodes.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Open;
        while let Some((u, next)) = stack.pop() {
            let children = nodes[u].children();
            if next < children.len() {
                stack.push((u, next + 1));
                let c = children[next].index();
                match mark[c] {
                    Mark::Open => return Some(NodeId::from(c)),
                    Mark::New => {
                        mark[c] = Mark::Open;
                        stack.push((c, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[u] = Mark::Done;
            }
        }
    }
    None
}

/// Incremental construction in topological order.
#[derive(Debug, Default, Clone)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, node: Node) -> NodeId {
        self.nodes.push(node);
        NodeId::from(self.nodes.len() - 1)
    }

    pub fn input(&mut self, var: usize, dist: LeafDistribution) -> NodeId {
        self.push(Node::Input { var: VarId::from(var), dist })
    }

    pub fn sum(&mut self, children: Vec<NodeId>, weights: Vec<f64>) -> NodeId {
        self.push(Node::Sum { children, weights })
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Product { children })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn build(self, num_vars: usize, root: NodeId) -> Result<Circuit> {
        Circuit::new(num_vars, self.nodes, root)
    }

    /// Builds with the last pushed node as root.
    pub fn finish(self, num_vars: usize) -> Result<Circuit> {
        let root = NodeId::from(self.nodes.len().saturating_sub(1));
        self.build(num_vars, root)
    }
}
