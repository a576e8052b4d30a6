//! Entropic optimal transport with log-domain Sinkhorn iterations.

use super::{Matrix, TransportationProblem};
use crate::error::Result;
use crate::math::log_sum_exp;
use crate::par::*;

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornConfig {
    /// Regularization strength; `None` uses a tenth of the mean cost.
    pub epsilon: Option<f64>,
    pub max_iter: usize,
    /// Stop once the L1 row-marginal violation falls below this.
    pub tol: f64,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        SinkhornConfig { epsilon: None, max_iter: 10_000, tol: 1e-9 }
    }
}

impl SinkhornConfig {
    pub fn resolve_epsilon(&self, cost: &Matrix) -> f64 {
        self.epsilon.unwrap_or_else(|| {
            let mean = cost.data().iter().sum::<f64>() / cost.data().len() as f64;
            if mean > 0.0 {
                0.1 * mean
            } else {
                1.0
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SinkhornResult {
    /// Unregularized transport cost of the returned plan.
    pub objective: f64,
    pub plan: Matrix,
    pub converged: bool,
    pub iterations: usize,
    /// L1 row-marginal violation of the returned plan.
    pub marginal_error: f64,
    pub epsilon: f64,
}

/// Iterations between marginal checks.
const CHECK_EVERY: usize = 10;

/// Entropic plan for `tp`. Rows and columns with zero weight are excluded
/// from the iterations and carry no mass. If `max_iter` is reached first,
/// the iterate with the smallest violation is returned and a warning logged.
pub fn sinkhorn(tp: &TransportationProblem, cfg: &SinkhornConfig) -> Result<SinkhornResult> {
    let eps = cfg.resolve_epsilon(tp.cost());
    let rows: Vec<usize> = (0..tp.row_weights().len()).filter(|&i| tp.row_weights()[i] > 0.0).collect();
    let cols: Vec<usize> = (0..tp.col_weights().len()).filter(|&j| tp.col_weights()[j] > 0.0).collect();
    let log_a: Vec<f64> = rows.iter().map(|&i| tp.row_weights()[i].ln()).collect();
    let log_b: Vec<f64> = cols.iter().map(|&j| tp.col_weights()[j].ln()).collect();
    // Scaled costs on the positive supports, in both layouts.
    let k = Matrix::from_fn(rows.len(), cols.len(), |a, b| tp.cost()[(rows[a], cols[b])] / eps);
    let kt = k.transpose();

    let mut f = vec![0.0; rows.len()];
    let mut g = vec![0.0; cols.len()];
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iter {
        iterations += 1;
        f = (0..rows.len())
            .into_par_iter()
            .map(|a| log_a[a] - log_sum_exp(k.row(a).iter().zip(&g).map(|(c, gj)| gj - c)))
            .collect();
        g = (0..cols.len())
            .into_par_iter()
            .map(|b| log_b[b] - log_sum_exp(kt.row(b).iter().zip(&f).map(|(c, fi)| fi - c)))
            .collect();
        if iterations % CHECK_EVERY == 0 || iterations == cfg.max_iter {
            let err = row_violation(&k, &f, &g, &log_a);
            if best.as_ref().is_none_or(|(e, _, _)| err < *e) {
                best = Some((err, f.clone(), g.clone()));
            }
            if err < cfg.tol {
                converged = true;
                break;
            }
        }
    }
    let (err, f, g) = best.unwrap_or_else(|| (row_violation(&k, &f, &g, &log_a), f, g));
    if !converged {
        log::warn!("sinkhorn did not converge in {iterations} iterations (violation {err:e}, epsilon {eps})");
    }
    let mut plan = Matrix::zeros(tp.row_weights().len(), tp.col_weights().len());
    for (a, &i) in rows.iter().enumerate() {
        for (b, &j) in cols.iter().enumerate() {
            plan[(i, j)] = (f[a] + g[b] - k[(a, b)]).exp();
        }
    }
    let objective = plan.dot(tp.cost());
    Ok(SinkhornResult { objective, plan, converged, iterations, marginal_error: err, epsilon: eps })
}

fn row_violation(k: &Matrix, f: &[f64], g: &[f64], log_a: &[f64]) -> f64 {
    (0..f.len())
        .into_par_iter()
        .map(|a| {
            let s: f64 = k.row(a).iter().zip(g).map(|(c, gj)| (f[a] + gj - c).exp()).sum();
            (s - log_a[a].exp()).abs()
        })
        .sum()
}
