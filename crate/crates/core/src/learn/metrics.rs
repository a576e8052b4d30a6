use crate::circuit::Circuit;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::*;

/// Mean `log p(d_k)` over the dataset.
pub fn mean_log_likelihood(c: &Circuit, data: &Dataset) -> Result<f64> {
    if data.num_vars() != c.num_vars() {
        return Err(Error::LengthMismatch(data.num_vars(), c.num_vars()));
    }
    if data.is_empty() {
        return Err(Error::Format("dataset has no rows".into()));
    }
    let logs = (0..data.len())
        .into_par_iter()
        .map(|k| c.log_evaluate(data.row(k)))
        .collect::<Result<Vec<f64>>>()?;
    if let Some(k) = logs.iter().position(|l| *l == f64::NEG_INFINITY) {
        return Err(Error::ZeroLikelihood(k));
    }
    Ok(logs.iter().sum::<f64>() / data.len() as f64)
}

/// `−(1 / (n·v·ln 2)) Σ_k log p(d_k)`.
pub fn bits_per_dimension(c: &Circuit, data: &Dataset) -> Result<f64> {
    Ok(-mean_log_likelihood(c, data)? / (c.num_vars() as f64 * std::f64::consts::LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::leaf::LeafDistribution::{Bernoulli, Dirac};

    #[test]
    fn uniform_bits_are_one() {
        let mut b = CircuitBuilder::new();
        let l: Vec<_> = (0..5).map(|v| b.input(v, Bernoulli { p: 0.5 })).collect();
        b.product(l);
        let c = b.finish(5).unwrap();
        let data = Dataset::new(5, vec![0.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0]).unwrap();
        assert!((bits_per_dimension(&c, &data).unwrap() - 1.0).abs() < 1e-12);
        let swapped = data.select(&[1, 0]);
        assert_eq!(bits_per_dimension(&c, &swapped).unwrap(), bits_per_dimension(&c, &data).unwrap());
    }

    #[test]
    fn zero_likelihood_is_reported() {
        let mut b = CircuitBuilder::new();
        b.input(0, Dirac { value: 1.0 });
        let c = b.finish(1).unwrap();
        let data = Dataset::new(1, vec![1.0, 2.0]).unwrap();
        assert!(matches!(bits_per_dimension(&c, &data), Err(Error::ZeroLikelihood(1))));
    }

    #[test]
    fn floored_point_fit_has_near_zero_bits() {
        let mut b = CircuitBuilder::new();
        b.input(0, Bernoulli { p: 1.0 - 1e-6 });
        let c = b.finish(1).unwrap();
        let bpd = bits_per_dimension(&c, &Dataset::new(1, vec![1.0]).unwrap()).unwrap();
        assert!(bpd > 0.0 && bpd < 2e-6);
    }
}
