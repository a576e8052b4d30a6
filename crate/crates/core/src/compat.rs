//! Variable bijections, scope partitions and structural compatibility.

use std::collections::HashMap;
use std::path::Path;

use crate::circuit::{Circuit, Node, NodeId, Scope, VarId};
use crate::error::{Error, Result};

/// Permutation from the variables of one circuit to those of another.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableBijection {
    map: Vec<VarId>,
}

impl VariableBijection {
    pub fn identity(num_vars: usize) -> Self {
        VariableBijection { map: (0..num_vars).map(VarId::from).collect() }
    }

    /// `map[i]` is the image of variable `i`.
    pub fn new(map: Vec<VarId>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for (i, v) in map.iter().enumerate() {
            if v.index() >= map.len() {
                return Err(Error::Bijection(format!("variable {i} maps to {v}, outside 0..{}", map.len())));
            }
            if std::mem::replace(&mut seen[v.index()], true) {
                return Err(Error::Bijection(format!("variable {v} is the image of two variables")));
            }
        }
        Ok(VariableBijection { map })
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let raw: Vec<u32> = serde_json::from_str(s).map_err(|e| Error::Format(format!("bijection json: {e}")))?;
        Self::new(raw.into_iter().map(VarId).collect())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn apply(&self, v: VarId) -> VarId {
        self.map[v.index()]
    }

    pub fn as_slice(&self) -> &[VarId] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![VarId(0); self.map.len()];
        for (i, v) in self.map.iter().enumerate() {
            inv[v.index()] = VarId::from(i);
        }
        VariableBijection { map: inv }
    }

    /// Errors unless the bijection covers both circuits' variables.
    pub fn check_covers(&self, p: &Circuit, q: &Circuit) -> Result<()> {
        if self.map.len() != p.num_vars() || self.map.len() != q.num_vars() {
            return Err(Error::Bijection(format!(
                "bijection over {} variables, circuits over {} and {}",
                self.map.len(),
                p.num_vars(),
                q.num_vars()
            )));
        }
        Ok(())
    }
}

/// Hierarchical partition of a scope into disjoint sub-scopes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScopePartitionTree {
    Leaf(VarId),
    Internal(Vec<ScopePartitionTree>),
}

impl ScopePartitionTree {
    pub fn scope(&self) -> Scope {
        match self {
            ScopePartitionTree::Leaf(v) => Scope::singleton(*v),
            ScopePartitionTree::Internal(children) => children
                .iter()
                .fold(Scope::default(), |acc, c| acc.union(&c.scope())),
        }
    }

    fn min_var(&self) -> VarId {
        match self {
            ScopePartitionTree::Leaf(v) => *v,
            ScopePartitionTree::Internal(children) => {
                children.iter().map(|c| c.min_var()).min().expect("nonempty")
            }
        }
    }

    /// Relabels variables and restores the canonical child order
    /// (ascending smallest variable).
    pub fn map(&self, bij: &VariableBijection) -> ScopePartitionTree {
        match self {
            ScopePartitionTree::Leaf(v) => ScopePartitionTree::Leaf(bij.apply(*v)),
            ScopePartitionTree::Internal(children) => {
                let mut mapped: Vec<_> = children.iter().map(|c| c.map(bij)).collect();
                mapped.sort_by_key(|c| c.min_var());
                ScopePartitionTree::Internal(mapped)
            }
        }
    }

    /// Number of leaves, i.e. the size of the partitioned scope.
    pub fn num_leaves(&self) -> usize {
        match self {
            ScopePartitionTree::Leaf(_) => 1,
            ScopePartitionTree::Internal(children) => children.iter().map(|c| c.num_leaves()).sum(),
        }
    }
}

/// Sorted child scopes of every product node that actually splits its scope.
fn decompositions(c: &Circuit) -> Vec<(NodeId, Vec<Scope>)> {
    c.nodes()
        .iter()
        .enumerate()
        .filter_map(|(i, node)| match node {
            Node::Product { children } if children.len() > 1 => {
                let mut parts: Vec<Scope> = children.iter().map(|ch| c.scope(*ch).clone()).collect();
                parts.sort();
                Some((NodeId::from(i), parts))
            }
            _ => None,
        })
        .collect()
}

/// The partition tree induced by a circuit's product nodes.
pub fn extract_partition(c: &Circuit) -> Result<ScopePartitionTree> {
    c.require_smooth_decomposable()?;
    let mut by_scope: HashMap<Scope, Vec<Scope>> = HashMap::new();
    for (id, parts) in decompositions(c) {
        let scope = c.scope(id).clone();
        match by_scope.get(&scope) {
            Some(existing) if *existing != parts => {
                return Err(Error::InconsistentDecomposition(
                    scope.vars().iter().map(|v| v.index()).collect(),
                ));
            }
            Some(_) => {}
            None => {
                by_scope.insert(scope, parts);
            }
        }
    }
    build_tree(c.scope(c.root()), &by_scope)
}

fn build_tree(scope: &Scope, by_scope: &HashMap<Scope, Vec<Scope>>) -> Result<ScopePartitionTree> {
    if scope.len() == 1 {
        return Ok(ScopePartitionTree::Leaf(scope.vars()[0]));
    }
    let parts = by_scope.get(scope).ok_or_else(|| {
        Error::InvalidCircuit(format!("scope {:?} is never decomposed by a product", scope.vars()))
    })?;
    let mut children = parts
        .iter()
        .map(|s| build_tree(s, by_scope))
        .collect::<Result<Vec<_>>>()?;
    children.sort_by_key(|c| c.min_var());
    Ok(ScopePartitionTree::Internal(children))
}

/// Outcome of a compatibility check.
#[derive(Debug, Clone, PartialEq)]
pub struct CompatibilityReport {
    /// Product nodes `(p, q)` whose scopes correspond under the bijection.
    pub product_pairs: Vec<(NodeId, NodeId)>,
    /// First corresponding product pair that decomposes differently.
    pub mismatch: Option<(NodeId, NodeId)>,
    /// Partition of the first circuit, when it has a consistent one.
    pub partition: Option<ScopePartitionTree>,
}

impl CompatibilityReport {
    pub fn is_compatible(&self) -> bool {
        self.mismatch.is_none()
    }

    pub fn into_result(self) -> Result<Self> {
        match self.mismatch {
            Some((p, q)) => Err(Error::NotCompatible { p, q }),
            None => Ok(self),
        }
    }
}

/// Compares how the two circuits decompose corresponding scopes. Only
/// structure is inspected; sum weights and leaf parameters are ignored.
pub fn check_compatible(p: &Circuit, q: &Circuit, bij: &VariableBijection) -> Result<CompatibilityReport> {
    p.require_smooth_decomposable()?;
    q.require_smooth_decomposable()?;
    bij.check_covers(p, q)?;

    let mut q_products: HashMap<Scope, Vec<(NodeId, Vec<Scope>)>> = HashMap::new();
    for (i, node) in q.nodes().iter().enumerate() {
        if let Node::Product { children } = node {
            let mut parts: Vec<Scope> = children.iter().map(|c| q.scope(*c).clone()).collect();
            parts.sort();
            q_products
                .entry(q.scope(NodeId::from(i)).clone())
                .or_default()
                .push((NodeId::from(i), parts));
        }
    }

    let mut product_pairs = Vec::new();
    let mut mismatch = None;
    for (i, node) in p.nodes().iter().enumerate() {
        let Node::Product { children } = node else { continue };
        let scope = p.scope(NodeId::from(i)).map(|v| bij.apply(v));
        let Some(candidates) = q_products.get(&scope) else { continue };
        let mut parts: Vec<Scope> = children
            .iter()
            .map(|c| p.scope(*c).map(|v| bij.apply(v)))
            .collect();
        parts.sort();
        for (qid, q_parts) in candidates {
            product_pairs.push((NodeId::from(i), *qid));
            if *q_parts != parts && mismatch.is_none() {
                mismatch = Some((NodeId::from(i), *qid));
            }
        }
    }
    let partition = extract_partition(p).ok();
    Ok(CompatibilityReport { product_pairs, mismatch, partition })
}
