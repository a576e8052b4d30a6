//! Exact Wasserstein distance by enumerating both joint distributions.

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::ot::{solve_transportation, Matrix, TransportationPlan, TransportationProblem};
use crate::par::*;

/// Largest joint support enumerated per circuit.
pub const EXACT_SUPPORT_CAP: u128 = 1 << 16;
/// Largest transportation problem (cells) solved.
pub const EXACT_CELL_CAP: u128 = 1 << 22;

/// Every assignment of a discrete circuit, variable 0 most significant,
/// with its probability.
pub fn enumerate_distribution(c: &Circuit) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let support = c
        .discrete_support()
        .ok_or_else(|| Error::UnsupportedPair("exact distance needs discrete leaves".into()))?;
    let size = support.iter().try_fold(1u128, |acc, m| acc.checked_mul(*m as u128)).unwrap_or(u128::MAX);
    if size > EXACT_SUPPORT_CAP {
        return Err(Error::TooLarge { what: "joint support", size, cap: EXACT_SUPPORT_CAP });
    }
    let size = size as usize;
    let points: Vec<Vec<f64>> = (0..size)
        .map(|mut idx| {
            let mut x = vec![0.0; support.len()];
            for (v, m) in support.iter().enumerate().rev() {
                x[v] = (idx % m) as f64;
                idx /= m;
            }
            x
        })
        .collect();
    let probs = points.par_iter().map(|x| c.evaluate(x)).collect::<Result<Vec<f64>>>()?;
    Ok((points, probs))
}

/// `W_p^p` between two discrete circuits over identically indexed
/// variables, with ground cost `‖x − y‖_p^p`.
pub fn exact_wasserstein(p: &Circuit, q: &Circuit, order: f64) -> Result<(f64, TransportationPlan)> {
    if p.num_vars() != q.num_vars() {
        return Err(Error::LengthMismatch(p.num_vars(), q.num_vars()));
    }
    let (xs, a) = enumerate_distribution(p)?;
    let (ys, b) = enumerate_distribution(q)?;
    let cells = xs.len() as u128 * ys.len() as u128;
    if cells > EXACT_CELL_CAP {
        return Err(Error::TooLarge { what: "exact transportation problem", size: cells, cap: EXACT_CELL_CAP });
    }
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|x| {
            ys.iter()
                .map(|y| x.iter().zip(y).map(|(s, t)| (s - t).abs().powf(order)).sum())
                .collect()
        })
        .collect();
    let cost = Matrix::from_vec(xs.len(), ys.len(), rows.into_iter().flatten().collect());
    let plan = solve_transportation(&TransportationProblem::new(a, b, cost)?)?;
    Ok((plan.objective, plan))
}
