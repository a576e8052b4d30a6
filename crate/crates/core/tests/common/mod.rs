//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use circuit_ot::circuit::{CircuitBuilder, Node, NodeId, VarId};
use circuit_ot::coupling::{CouplingCircuit, CouplingNode};
use circuit_ot::ot::Matrix;
use circuit_ot::Circuit;
use rand::seq::SliceRandom;
use rand::Rng;

/// Minimum transportation objective over all vertices of the polytope,
/// found by trying every `(m + n - 1)`-subset of cells as a basis.
pub fn vertex_enumeration(a: &[f64], b: &[f64], cost: &Matrix) -> f64 {
    let (m, n) = (a.len(), b.len());
    let k = m + n - 1;
    let cells: Vec<(usize, usize)> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let mut best = f64::INFINITY;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if let Some(obj) = basis_objective(a, b, cost, &idx.iter().map(|&t| cells[t]).collect::<Vec<_>>()) {
            best = best.min(obj);
        }
        // Next combination in lexicographic order.
        let mut t = k;
        while t > 0 && idx[t - 1] == cells.len() - k + t - 1 {
            t -= 1;
        }
        if t == 0 {
            break;
        }
        idx[t - 1] += 1;
        for s in t..k {
            idx[s] = idx[s - 1] + 1;
        }
    }
    best
}

fn basis_objective(a: &[f64], b: &[f64], cost: &Matrix, basis: &[(usize, usize)]) -> Option<f64> {
    let m = a.len();
    let mut residual: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut alive = vec![true; basis.len()];
    let mut obj = 0.0;
    for _ in 0..basis.len() {
        let mut degree = vec![0usize; residual.len()];
        for (t, &(i, j)) in basis.iter().enumerate() {
            if alive[t] {
                degree[i] += 1;
                degree[m + j] += 1;
            }
        }
        let (t, leaf_is_row) = basis.iter().enumerate().find_map(|(t, &(i, j))| {
            if !alive[t] {
                None
            } else if degree[i] == 1 {
                Some((t, true))
            } else if degree[m + j] == 1 {
                Some((t, false))
            } else {
                None
            }
        })?;
        let (i, j) = basis[t];
        let flow = if leaf_is_row { residual[i] } else { residual[m + j] };
        if flow < -1e-12 {
            return None;
        }
        residual[i] -= flow;
        residual[m + j] -= flow;
        obj += flow * cost[(i, j)];
        alive[t] = false;
    }
    if residual.iter().any(|r| r.abs() > 1e-9) {
        return None;
    }
    Some(obj)
}

/// North-west corner vertex after shuffling rows and columns.
fn random_vertex<R: Rng>(a: &[f64], b: &[f64], rng: &mut R) -> Matrix {
    let (m, n) = (a.len(), b.len());
    let mut rows: Vec<usize> = (0..m).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    rows.shuffle(rng);
    cols.shuffle(rng);
    let mut ra: Vec<f64> = a.to_vec();
    let mut rb: Vec<f64> = b.to_vec();
    let mut plan = Matrix::zeros(m, n);
    let (mut p, mut q) = (0, 0);
    while p < m && q < n {
        let (i, j) = (rows[p], cols[q]);
        let x = ra[i].min(rb[j]);
        plan[(i, j)] += x;
        ra[i] -= x;
        rb[j] -= x;
        if ra[i] <= rb[j] {
            p += 1;
        } else {
            q += 1;
        }
    }
    plan
}

/// Random feasible plan: a random convex combination of random vertices.
pub fn random_feasible_plan<R: Rng>(a: &[f64], b: &[f64], rng: &mut R) -> Matrix {
    let count = rng.random_range(1..=4);
    let lambdas: Vec<f64> = (0..count).map(|_| -rng.random::<f64>().ln()).collect();
    let total: f64 = lambdas.iter().sum();
    let mut plan = Matrix::zeros(a.len(), b.len());
    for l in lambdas {
        let v = random_vertex(a, b, rng);
        for (p, x) in plan.data_mut().iter_mut().zip(v.data()) {
            *p += l / total * x;
        }
    }
    plan
}

/// Random probability vector, occasionally with exact zeros.
pub fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n)
        .map(|_| if rng.random::<f64>() < 0.1 { 0.0 } else { -rng.random::<f64>().ln() })
        .collect();
    if w.iter().all(|x| *x == 0.0) {
        w[0] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// Every assignment over the given per-variable support sizes, variable 0
/// most significant.
pub fn assignments(support: &[usize]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![]];
    for &m in support {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..m).map(move |x| {
                    let mut p = prefix.clone();
                    p.push(x as f64);
                    p
                })
            })
            .collect();
    }
    out
}

/// Distribution of a discrete circuit as (assignment, probability) pairs.
pub fn enumerate(c: &Circuit) -> Vec<(Vec<f64>, f64)> {
    let support = c.discrete_support().expect("discrete circuit");
    assignments(&support)
        .into_iter()
        .map(|x| {
            let p = c.evaluate(&x).unwrap();
            (x, p)
        })
        .collect()
}

pub fn lp_distance(x: &[f64], y: &[f64], order: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(order)).sum()
}

/// Same circuit with variable `i` renamed to `perm[i]`.
pub fn relabel(c: &Circuit, perm: &[usize]) -> Circuit {
    let nodes = c
        .nodes()
        .iter()
        .map(|n| match n {
            Node::Input { var, dist } => Node::Input { var: VarId::from(perm[var.index()]), dist: dist.clone() },
            other => other.clone(),
        })
        .collect();
    Circuit::new(c.num_vars(), nodes, c.root()).unwrap()
}

/// Copy of `c` in which every node has exactly one parent.
pub fn tree_expand(c: &Circuit) -> Circuit {
    fn copy(c: &Circuit, id: NodeId, b: &mut CircuitBuilder) -> NodeId {
        match c.node(id) {
            Node::Input { var, dist } => b.input(var.index(), dist.clone()),
            Node::Product { children } => {
                let ch = children.iter().map(|ch| copy(c, *ch, b)).collect();
                b.product(ch)
            }
            Node::Sum { children, weights } => {
                let ch = children.iter().map(|ch| copy(c, *ch, b)).collect();
                b.sum(ch, weights.clone())
            }
        }
    }
    let mut b = CircuitBuilder::new();
    copy(c, c.root(), &mut b);
    b.finish(c.num_vars()).unwrap()
}

/// Replaces every sum node's joint weights by a random feasible plan with
/// the same marginals.
pub fn reparameterize<R: Rng>(coupling: &CouplingCircuit, rng: &mut R) -> CouplingCircuit {
    let mut out = coupling.clone();
    for i in 0..coupling.len() {
        if let CouplingNode::Sum { row_weights, col_weights, .. } = coupling.node(NodeId::from(i)) {
            out.set_sum_weights(NodeId::from(i), random_feasible_plan(row_weights, col_weights, rng)).unwrap();
        }
    }
    out
}
