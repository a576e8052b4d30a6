//! Exact balanced transportation problems via the transportation simplex.
//!
//! The basis is a spanning tree of the bipartite row/column graph with
//! `m + n - 1` cells. Each pivot prices all non-basic cells with the dual
//! potentials, sends flow around the cycle closed by the entering cell and
//! drops the first blocking cell. Pricing is most-negative reduced cost;
//! after a run of degenerate pivots it switches to the lowest-index rule,
//! which cannot cycle.

use std::collections::VecDeque;

use super::Matrix;
use crate::error::{Error, Result};

/// Allowed deviation of each weight vector's total from one.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TransportationProblem {
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
    cost: Matrix,
}

impl TransportationProblem {
    pub fn new(row_weights: Vec<f64>, col_weights: Vec<f64>, cost: Matrix) -> Result<Self> {
        if row_weights.is_empty() || col_weights.is_empty() {
            return Err(Error::Infeasible("empty weight vector".into()));
        }
        if cost.rows() != row_weights.len() || cost.cols() != col_weights.len() {
            return Err(Error::Infeasible(format!(
                "cost is {}x{} but weights are {} and {}",
                cost.rows(),
                cost.cols(),
                row_weights.len(),
                col_weights.len()
            )));
        }
        for (name, w) in [("row", &row_weights), ("column", &col_weights)] {
            if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                return Err(Error::Infeasible(format!("{name} weights must be finite and nonnegative")));
            }
            let total: f64 = w.iter().sum();
            if (total - 1.0).abs() > MARGINAL_TOLERANCE {
                return Err(Error::Infeasible(format!("{name} weights sum to {total}")));
            }
        }
        if cost.data().iter().any(|c| !c.is_finite()) {
            return Err(Error::Infeasible("cost matrix has non-finite entries".into()));
        }
        Ok(TransportationProblem { row_weights, col_weights, cost })
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    pub fn cost(&self) -> &Matrix {
        &self.cost
    }

    /// Largest absolute deviation of `plan`'s marginals from the weights.
    pub fn marginal_error(&self, plan: &Matrix) -> f64 {
        let (rs, cs) = (plan.row_sums(), plan.col_sums());
        let rows = rs.iter().zip(&self.row_weights).map(|(a, b)| (a - b).abs());
        let cols = cs.iter().zip(&self.col_weights).map(|(a, b)| (a - b).abs());
        rows.chain(cols).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportationPlan {
    pub plan: Matrix,
    pub objective: f64,
}

/// Exact minimum-cost plan. Output is a deterministic function of the input.
pub fn solve_transportation(tp: &TransportationProblem) -> Result<TransportationPlan> {
    let (m, n) = (tp.row_weights.len(), tp.col_weights.len());
    if m == 1 || n == 1 {
        let plan = Matrix::from_fn(m, n, |i, j| if m == 1 { tp.col_weights[j] } else { tp.row_weights[i] });
        let objective = plan.dot(&tp.cost);
        return Ok(TransportationPlan { plan, objective });
    }
    let mut basis = Basis::north_west(&tp.row_weights, &tp.col_weights);
    basis.optimize(&tp.cost)?;
    let mut plan = Matrix::zeros(m, n);
    for (&(i, j), &f) in basis.cells.iter().zip(&basis.flow) {
        plan[(i, j)] += f;
    }
    let objective = plan.dot(&tp.cost);
    Ok(TransportationPlan { plan, objective })
}

struct Basis {
    m: usize,
    n: usize,
    cells: Vec<(usize, usize)>,
    flow: Vec<f64>,
    is_basic: Vec<bool>,
}

impl Basis {
    /// North-west corner start; degenerate zero-flow cells are kept so the
    /// basis is always a spanning tree.
    fn north_west(rows: &[f64], cols: &[f64]) -> Basis {
        let (m, n) = (rows.len(), cols.len());
        let mut ra = rows.to_vec();
        let mut rb = cols.to_vec();
        let mut cells = Vec::with_capacity(m + n - 1);
        let mut flow = Vec::with_capacity(m + n - 1);
        let mut is_basic = vec![false; m * n];
        let (mut i, mut j) = (0, 0);
        loop {
            let x = ra[i].min(rb[j]);
            cells.push((i, j));
            flow.push(x);
            is_basic[i * n + j] = true;
            ra[i] -= x;
            rb[j] -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || ra[i] < rb[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        debug_assert_eq!(cells.len(), m + n - 1);
        Basis { m, n, cells, flow, is_basic }
    }

    /// Incident basic cells per graph node; rows are `0..m`, columns `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (k, &(i, j)) in self.cells.iter().enumerate() {
            adj[i].push(k);
            adj[self.m + j].push(k);
        }
        adj
    }

    fn other_end(&self, k: usize, node: usize) -> usize {
        let (i, j) = self.cells[k];
        if node == i {
            self.m + j
        } else {
            i
        }
    }

    /// Dual potentials with `u[0] = 0` and `u[i] + v[j] = c[i][j]` on the basis.
    fn potentials(&self, adj: &[Vec<usize>], cost: &Matrix) -> (Vec<f64>, Vec<f64>) {
        let mut pot = vec![f64::NAN; self.m + self.n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &k in &adj[node] {
                let other = self.other_end(k, node);
                if pot[other].is_nan() {
                    let (i, j) = self.cells[k];
                    pot[other] = cost[(i, j)] - pot[node];
                    queue.push_back(other);
                }
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basic cells on the tree path from column `j` to row `i`, in walk order.
    fn path(&self, adj: &[Vec<usize>], i: usize, j: usize) -> Vec<usize> {
        let mut parent_edge = vec![usize::MAX; self.m + self.n];
        let mut seen = vec![false; self.m + self.n];
        seen[i] = true;
        let mut queue = VecDeque::from([i]);
        let target = self.m + j;
        while let Some(node) = queue.pop_front() {
            if node == target {
                break;
            }
            for &k in &adj[node] {
                let other = self.other_end(k, node);
                if !seen[other] {
                    seen[other] = true;
                    parent_edge[other] = k;
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = target;
        while node != i {
            let k = parent_edge[node];
            path.push(k);
            node = self.other_end(k, node);
        }
        path
    }

    fn optimize(&mut self, cost: &Matrix) -> Result<()> {
        let (m, n) = (self.m, self.n);
        let scale = cost.data().iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let eps = 1e-12 * scale;
        let cap = 10_000usize.max(50 * (m + n) * (m + n));
        let mut degenerate_run = 0usize;
        for _ in 0..cap {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj, cost);
            let lowest_index = degenerate_run > m + n;
            let mut entering = None;
            let mut best = -eps;
            'scan: for i in 0..m {
                let row = cost.row(i);
                for j in 0..n {
                    if self.is_basic[i * n + j] {
                        continue;
                    }
                    let r = row[j] - u[i] - v[j];
                    if r < best {
                        entering = Some((i, j));
                        if lowest_index {
                            break 'scan;
                        }
                        best = r;
                    }
                }
            }
            let Some((ei, ej)) = entering else { return Ok(()) };

            let path = self.path(&adj, ei, ej);
            debug_assert!(path.len() % 2 == 1);
            // Cells at even positions of the walk lose flow.
            let mut leave = usize::MAX;
            let mut theta = f64::INFINITY;
            for &k in path.iter().step_by(2) {
                let f = self.flow[k];
                let (ci, cj) = self.cells[k];
                let better = f < theta
                    || (f == theta && {
                        let (li, lj) = self.cells[leave];
                        ci * n + cj < li * n + lj
                    });
                if better {
                    theta = f;
                    leave = k;
                }
            }
            for (pos, &k) in path.iter().enumerate() {
                if pos % 2 == 0 {
                    self.flow[k] -= theta;
                } else {
                    self.flow[k] += theta;
                }
            }
            self.flow[leave] = 0.0;
            let (li, lj) = self.cells[leave];
            self.is_basic[li * n + lj] = false;
            self.is_basic[ei * n + ej] = true;
            self.cells[leave] = (ei, ej);
            self.flow[leave] = theta;
            degenerate_run = if theta == 0.0 { degenerate_run + 1 } else { 0 };
        }
        Err(Error::SolverStalled(cap))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(r: &[f64], c: &[f64], cost: &[&[f64]]) -> TransportationProblem {
        TransportationProblem::new(r.to_vec(), c.to_vec(), Matrix::from_rows(cost)).unwrap()
    }

    #[test]
    fn zero_cost_matching() {
        let s = solve_transportation(&tp(&[0.5, 0.5], &[0.5, 0.5], &[&[0.0, 1.0], &[1.0, 0.0]])).unwrap();
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.plan, Matrix::from_rows(&[[0.5, 0.0], [0.0, 0.5]]));
    }

    #[test]
    fn two_by_two_vertex() {
        let s = solve_transportation(&tp(&[0.5, 0.5], &[0.3, 0.7], &[&[1.0, 2.0], &[3.0, 1.0]])).unwrap();
        assert!((s.objective - 1.2).abs() < 1e-12);
        let want = [[0.3, 0.2], [0.0, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s.plan[(i, j)] - want[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bernoulli_mixture_costs() {
        let s = solve_transportation(&tp(&[0.5, 0.5], &[0.3, 0.7], &[&[0.1, 0.7], &[0.7, 0.1]])).unwrap();
        assert!((s.objective - 0.22).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_rows_get_no_mass() {
        let s = solve_transportation(&tp(
            &[0.0, 0.6, 0.4],
            &[0.5, 0.0, 0.5],
            &[&[0.0, 0.0, 0.0], &[1.0, 5.0, 2.0], &[3.0, 0.5, 1.0]],
        ))
        .unwrap();
        assert!(s.plan.row(0).iter().all(|x| *x == 0.0));
        assert!((0..3).all(|i| s.plan[(i, 1)] == 0.0));
        // 0.5 of row 1 to col 0 costs 0.5; the rest goes to col 2.
        assert!((s.objective - (0.5 + 0.1 * 2.0 + 0.4 * 1.0)).abs() < 1e-12);
    }

    #[test]
    fn precondition_violations() {
        let bad = TransportationProblem::new(vec![0.5, 0.6], vec![1.0], Matrix::zeros(2, 1));
        assert!(matches!(bad, Err(Error::Infeasible(_))));
        let bad = TransportationProblem::new(vec![1.0], vec![1.0], Matrix::zeros(2, 1));
        assert!(matches!(bad, Err(Error::Infeasible(_))));
    }

    #[test]
    fn degenerate_uniform_assignment() {
        // Identity-like permutation problem with many ties.
        let n = 12;
        let w = vec![1.0 / n as f64; n];
        let cost = Matrix::from_fn(n, n, |i, j| ((5 * i + 7) % n).abs_diff(j) as f64);
        let s = solve_transportation(&TransportationProblem::new(w.clone(), w, cost).unwrap()).unwrap();
        assert!(s.objective.abs() < 1e-12);
    }
}
