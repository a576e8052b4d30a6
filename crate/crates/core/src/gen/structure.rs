//! HCLT-shaped random circuits over a shared random scope partition.
//!
//! Every region of the partition exposes `k` nodes. A leaf region exposes
//! `k` sums, each over `k` fresh input nodes. An internal region pairs the
//! `i`-th nodes of its two sub-regions into `k` products and exposes `k`
//! sums over all of them; the root region has a single sum. With `k = 1`
//! sums are omitted. Circuits built over one partition are compatible under
//! the identity bijection.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, CircuitBuilder, NodeId, VarId};
use crate::compat::ScopePartitionTree;
use crate::error::Result;
use crate::leaf::LeafDistribution;
use crate::rng::SeedTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LeafKind {
    Bernoulli,
    Categorical { m: usize },
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub v: usize,
    pub k: usize,
    pub leaf_kind: LeafKind,
    pub seed: u64,
    /// Symmetric Dirichlet concentration for sum weights.
    pub weight_alpha: f64,
}

impl GenSpec {
    pub fn new(v: usize, k: usize, leaf_kind: LeafKind, seed: u64) -> Self {
        GenSpec { v, k, leaf_kind, seed, weight_alpha: 1.0 }
    }
}

/// Random binary partition of `0..v` with near-balanced splits.
pub fn random_partition<R: Rng + ?Sized>(v: usize, rng: &mut R) -> ScopePartitionTree {
    assert!(v >= 1, "partition of an empty scope");
    let mut vars: Vec<VarId> = (0..v).map(VarId::from).collect();
    vars.shuffle(rng);
    split(&vars, rng)
}

fn split<R: Rng + ?Sized>(vars: &[VarId], rng: &mut R) -> ScopePartitionTree {
    if vars.len() == 1 {
        return ScopePartitionTree::Leaf(vars[0]);
    }
    let mut vars = vars.to_vec();
    vars.shuffle(rng);
    let half = vars.len() / 2;
    let cut = if vars.len() % 2 == 1 && rng.random::<bool>() { half + 1 } else { half };
    let (mut a, mut b) = (split(&vars[..cut], rng), split(&vars[cut..], rng));
    if b.scope().vars()[0] < a.scope().vars()[0] {
        std::mem::swap(&mut a, &mut b);
    }
    ScopePartitionTree::Internal(vec![a, b])
}

fn dirichlet<R: Rng + ?Sized>(k: usize, alpha: f64, rng: &mut R) -> Vec<f64> {
    let gamma = Gamma::new(alpha, 1.0).expect("positive concentration");
    let mut w: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|x| *x /= total);
    } else {
        w.iter_mut().for_each(|x| *x = 1.0 / k as f64);
    }
    w
}

fn random_leaf<R: Rng + ?Sized>(kind: LeafKind, rng: &mut R) -> LeafDistribution {
    match kind {
        LeafKind::Bernoulli => LeafDistribution::Bernoulli { p: rng.random_range(0.05..0.95) },
        LeafKind::Categorical { m } => LeafDistribution::Categorical { probs: dirichlet(m, 1.0, rng) },
        LeafKind::Gaussian => LeafDistribution::Gaussian {
            mu: rng.random_range(-5.0..5.0),
            sigma: rng.random_range(0.5..2.0),
        },
    }
}

struct Gen<'a, R: Rng> {
    spec: &'a GenSpec,
    rng: R,
    b: CircuitBuilder,
}

impl<R: Rng> Gen<'_, R> {
    fn region(&mut self, tree: &ScopePartitionTree, is_root: bool) -> Vec<NodeId> {
        let k = self.spec.k;
        let width = if is_root { 1 } else { k };
        match tree {
            ScopePartitionTree::Leaf(var) => {
                if k == 1 {
                    let d = random_leaf(self.spec.leaf_kind, &mut self.rng);
                    return vec![self.b.input(var.index(), d)];
                }
                (0..width)
                    .map(|_| {
                        let leaves: Vec<NodeId> = (0..k)
                            .map(|_| {
                                let d = random_leaf(self.spec.leaf_kind, &mut self.rng);
                                self.b.input(var.index(), d)
                            })
                            .collect();
                        let w = dirichlet(k, self.spec.weight_alpha, &mut self.rng);
                        self.b.sum(leaves, w)
                    })
                    .collect()
            }
            ScopePartitionTree::Internal(children) => {
                let parts: Vec<Vec<NodeId>> = children.iter().map(|c| self.region(c, false)).collect();
                let products: Vec<NodeId> =
                    (0..k).map(|i| self.b.product(parts.iter().map(|p| p[i]).collect())).collect();
                if k == 1 {
                    return products;
                }
                (0..width)
                    .map(|_| {
                        let w = dirichlet(k, self.spec.weight_alpha, &mut self.rng);
                        self.b.sum(products.clone(), w)
                    })
                    .collect()
            }
        }
    }
}

/// `count` random circuits sharing one random partition.
pub fn generate_family(spec: &GenSpec, count: usize) -> Result<(Vec<Circuit>, ScopePartitionTree)> {
    assert!(spec.v >= 1 && spec.k >= 1, "generator needs v >= 1 and k >= 1");
    let seeds = SeedTree::new(spec.seed);
    let tree = random_partition(spec.v, &mut seeds.child("partition").rng());
    let circuits = (0..count)
        .map(|i| {
            let mut g = Gen { spec, rng: seeds.child("circuit").index(i as u64).rng(), b: CircuitBuilder::new() };
            let root = g.region(&tree, true)[0];
            g.b.build(spec.v, root)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((circuits, tree))
}

/// Two random compatible circuits and their shared partition.
pub fn generate_pair(spec: &GenSpec) -> Result<(Circuit, Circuit, ScopePartitionTree)> {
    let (mut cs, tree) = generate_family(spec, 2)?;
    let q = cs.pop().expect("two circuits");
    let p = cs.pop().expect("two circuits");
    Ok((p, q, tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compat::{check_compatible, extract_partition, VariableBijection};
    use crate::math::ols_slope;

    #[test]
    fn single_leaf_when_degenerate() {
        let (p, q, _) = generate_pair(&GenSpec::new(1, 1, LeafKind::Bernoulli, 3)).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn two_by_two_node_count() {
        let (p, q, tree) = generate_pair(&GenSpec::new(2, 2, LeafKind::Bernoulli, 5)).unwrap();
        // root sum + 2 products + 4 leaf sums with 2 leaves each
        assert_eq!(p.len(), 1 + 2 + 4 * (1 + 2));
        assert!(check_compatible(&p, &q, &VariableBijection::identity(2)).unwrap().is_compatible());
        assert_eq!(extract_partition(&p).unwrap(), tree);
        assert_eq!(extract_partition(&q).unwrap(), tree);
    }

    #[test]
    fn same_seed_same_bytes() {
        let spec = GenSpec::new(5, 3, LeafKind::Gaussian, 17);
        let (a, ..) = generate_pair(&spec).unwrap();
        let (b, ..) = generate_pair(&spec).unwrap();
        assert_eq!(a.to_json_string(), b.to_json_string());
        let (c, ..) = generate_pair(&GenSpec { seed: 18, ..spec }).unwrap();
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn always_valid_and_compatible() {
        for seed in 0..500u64 {
            let v = 1 + (seed % 7) as usize;
            let k = 1 + (seed / 7 % 4) as usize;
            let kind = match seed % 3 {
                0 => LeafKind::Bernoulli,
                1 => LeafKind::Categorical { m: 3 },
                _ => LeafKind::Gaussian,
            };
            let (p, q, tree) = generate_pair(&GenSpec::new(v, k, kind, seed)).unwrap();
            p.require_smooth_decomposable().unwrap();
            q.require_smooth_decomposable().unwrap();
            assert!(check_compatible(&p, &q, &VariableBijection::identity(v)).unwrap().is_compatible());
            assert_eq!(tree.num_leaves(), v);
        }
    }

    #[test]
    fn weighted_edges_grow_quadratically_in_k() {
        let ks = [2usize, 3, 4, 5, 6, 7, 8];
        for v in 2..=10 {
            let x: Vec<f64> = ks.iter().map(|k| (*k as f64).ln()).collect();
            let y: Vec<f64> = ks
                .iter()
                .map(|&k| {
                    let (p, ..) = generate_pair(&GenSpec::new(v, k, LeafKind::Bernoulli, 1)).unwrap();
                    (p.num_sum_edges() as f64).ln()
                })
                .collect();
            let slope = ols_slope(&x, &y);
            assert!((slope - 2.0).abs() <= 0.2, "v={v}: slope {slope}");
        }
    }

    #[test]
    fn edge_count_is_affine_in_v() {
        // v leaf regions of k sums over k leaves, v - 2 inner regions of k
        // products (2 edges each) and k sums, and a root with one sum.
        for v in 2..=32 {
            for k in 2..=5 {
                let (p, ..) = generate_pair(&GenSpec::new(v, k, LeafKind::Bernoulli, v as u64)).unwrap();
                assert_eq!(p.num_edges(), v * k * k + (v - 2) * (k * k + 2 * k) + 3 * k);
            }
        }
    }
}
