//! Flat mixtures obtained by distributing sums over products, and the
//! mixture-restricted Wasserstein distance between them.

use std::collections::HashMap;

use crate::circuit::{Circuit, Node, NodeId, VarId};
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;
use crate::ot::{leaf_wasserstein, solve_transportation, Matrix, TransportationPlan, TransportationProblem};
use crate::par::*;

/// Default limit on unrolled components.
pub const UNROLL_CAP: u128 = 1_000_000;
/// Largest component-by-component problem solved.
pub const MIXTURE_CELL_CAP: u128 = 1 << 22;

/// One fully factorized component.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub weight: f64,
    /// Per variable, an index into [`MixtureForm::leaves`].
    pub factors: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureForm {
    num_vars: usize,
    leaves: Vec<LeafDistribution>,
    components: Vec<Component>,
}

impl MixtureForm {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn leaves(&self) -> &[LeafDistribution] {
        &self.leaves
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn factor(&self, component: usize, var: usize) -> &LeafDistribution {
        &self.leaves[self.components[component].factors[var]]
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.num_vars {
            return Err(Error::LengthMismatch(x.len(), self.num_vars));
        }
        let mut total = 0.0;
        for c in &self.components {
            let mut p = c.weight;
            for (v, f) in c.factors.iter().enumerate() {
                p *= self.leaves[*f].density(v, x[v])?;
            }
            total += p;
        }
        Ok(total)
    }
}

/// Number of components `unroll` would produce, saturating.
fn component_count(c: &Circuit) -> u128 {
    let mut count: Vec<u128> = Vec::with_capacity(c.len());
    for node in c.nodes() {
        let n = match node {
            Node::Input { .. } => 1,
            Node::Product { children } => children
                .iter()
                .fold(1u128, |acc, ch| acc.saturating_mul(count[ch.index()])),
            Node::Sum { children, .. } => children
                .iter()
                .fold(0u128, |acc, ch| acc.saturating_add(count[ch.index()])),
        };
        count.push(n);
    }
    count[c.root().index()]
}

pub fn unroll(c: &Circuit) -> Result<MixtureForm> {
    unroll_with_cap(c, UNROLL_CAP)
}

/// Distributes every sum over the products above it. Fails with
/// `TooLarge` before allocating if more than `cap` components would result.
pub fn unroll_with_cap(c: &Circuit, cap: u128) -> Result<MixtureForm> {
    c.require_smooth_decomposable()?;
    let size = component_count(c);
    if size > cap {
        return Err(Error::TooLarge { what: "unrolled mixture", size, cap });
    }
    let mut leaf_index: HashMap<NodeId, usize> = HashMap::new();
    let mut leaves = Vec::new();
    // Per node: (weight, [(var, leaf index)]) for each component.
    type Partial = Vec<(f64, Vec<(VarId, usize)>)>;
    let mut parts: Vec<Partial> = Vec::with_capacity(c.len());
    for (i, node) in c.nodes().iter().enumerate() {
        let comps = match node {
            Node::Input { var, dist } => {
                let li = *leaf_index.entry(NodeId::from(i)).or_insert_with(|| {
                    leaves.push(dist.clone());
                    leaves.len() - 1
                });
                vec![(1.0, vec![(*var, li)])]
            }
            Node::Sum { children, weights } => children
                .iter()
                .zip(weights)
                .flat_map(|(ch, w)| parts[ch.index()].iter().map(move |(cw, f)| (w * cw, f.clone())))
                .collect(),
            Node::Product { children } => {
                let mut acc: Partial = vec![(1.0, Vec::new())];
                for ch in children {
                    acc = acc
                        .iter()
                        .flat_map(|(w, f)| {
                            parts[ch.index()].iter().map(move |(cw, cf)| {
                                let mut merged = f.clone();
                                merged.extend_from_slice(cf);
                                (w * cw, merged)
                            })
                        })
                        .collect();
                }
                acc
            }
        };
        parts.push(comps);
    }
    let components = parts
        .swap_remove(c.root().index())
        .into_iter()
        .map(|(weight, mut f)| {
            f.sort_by_key(|(v, _)| *v);
            Component { weight, factors: f.into_iter().map(|(_, li)| li).collect() }
        })
        .collect();
    Ok(MixtureForm { num_vars: c.num_vars(), leaves, components })
}

/// `MW_p^p`: optimal transport between component weights with the
/// separable leaf-to-leaf cost between components.
pub fn mixture_wasserstein(p: &MixtureForm, q: &MixtureForm, order: f64) -> Result<(f64, TransportationPlan)> {
    if p.num_vars != q.num_vars {
        return Err(Error::LengthMismatch(p.num_vars, q.num_vars));
    }
    let (m, n) = (p.components.len(), q.components.len());
    let cells = m as u128 * n as u128;
    if cells > MIXTURE_CELL_CAP {
        return Err(Error::TooLarge { what: "mixture transportation problem", size: cells, cap: MIXTURE_CELL_CAP });
    }
    // Leaf distances, computed once per distinct leaf pair.
    let leaf_cost: Vec<Vec<f64>> = p
        .leaves
        .par_iter()
        .map(|a| {
            q.leaves
                .iter()
                .map(|b| leaf_wasserstein(a, b, order).map(|t| t.cost).or_else(|e| match e {
                    // Pairs of mismatched kinds only matter if some component uses them.
                    Error::UnsupportedPair(_) => Ok(f64::NAN),
                    e => Err(e),
                }))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<f64>> = p
        .components
        .par_iter()
        .map(|ci| {
            q.components
                .iter()
                .map(|cj| {
                    let mut total = 0.0;
                    for (a, b) in ci.factors.iter().zip(&cj.factors) {
                        let c = leaf_cost[*a][*b];
                        if c.is_nan() {
                            return Err(Error::UnsupportedPair(format!(
                                "{} vs {}",
                                p.leaves[*a].kind_name(),
                                q.leaves[*b].kind_name()
                            )));
                        }
                        total += c;
                    }
                    Ok(total)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let cost = Matrix::from_vec(m, n, rows.into_iter().flatten().collect());
    let a: Vec<f64> = p.components.iter().map(|c| c.weight).collect();
    let b: Vec<f64> = q.components.iter().map(|c| c.weight).collect();
    let plan = solve_transportation(&TransportationProblem::new(a, b, cost)?)?;
    Ok((plan.objective, plan))
}
