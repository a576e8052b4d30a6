use crate::circuit::{Circuit, Node, NodeId};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::*;

/// Expected distances `E_node ‖X − d_k‖_p^p` for every node and datapoint.
///
/// Two tables are kept. `expected` mixes sum children by their weights and
/// is the expectation under the node's own distribution. `routed` takes the
/// minimum over sum children instead, which is the cost of the cheapest
/// single-path routing of the datapoint through the subtree.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCache {
    num_nodes: usize,
    root: NodeId,
    order: f64,
    // Datapoint-major: entry `k * num_nodes + node`.
    expected: Vec<f64>,
    routed: Vec<f64>,
}

impl DistanceCache {
    pub fn num_data(&self) -> usize {
        self.expected.len() / self.num_nodes
    }

    pub fn order(&self) -> f64 {
        self.order
    }

    pub fn expected(&self, node: NodeId, k: usize) -> f64 {
        self.expected[k * self.num_nodes + node.index()]
    }

    pub fn routed(&self, node: NodeId, k: usize) -> f64 {
        self.routed[k * self.num_nodes + node.index()]
    }

    pub(crate) fn routed_row(&self, k: usize) -> &[f64] {
        &self.routed[k * self.num_nodes..(k + 1) * self.num_nodes]
    }

    /// Mean routed root distance over the dataset.
    pub fn ecw(&self) -> f64 {
        let n = self.num_data();
        (0..n).map(|k| self.routed(self.root, k)).sum::<f64>() / n as f64
    }
}

pub(crate) fn check_data(c: &Circuit, data: &Dataset) -> Result<()> {
    if data.num_vars() != c.num_vars() {
        return Err(Error::LengthMismatch(data.num_vars(), c.num_vars()));
    }
    if data.is_empty() {
        return Err(Error::Format("dataset has no rows".into()));
    }
    c.require_smooth_decomposable()
}

/// Bottom-up pass filling the cache, parallel over datapoints.
pub fn inference_pass(c: &Circuit, data: &Dataset, order: f64) -> Result<DistanceCache> {
    check_data(c, data)?;
    let columns = (0..data.len())
        .into_par_iter()
        .map(|k| {
            let d = data.row(k);
            let mut expected = Vec::with_capacity(c.len());
            let mut routed = Vec::with_capacity(c.len());
            for node in c.nodes() {
                let (e, r) = match node {
                    Node::Input { var, dist } => {
                        let v = dist.expected_distance(var.index(), d[var.index()], order)?;
                        (v, v)
                    }
                    Node::Product { children } => children
                        .iter()
                        .fold((0.0, 0.0), |(e, r), ch| (e + expected[ch.index()], r + routed[ch.index()])),
                    Node::Sum { children, weights } => (
                        children.iter().zip(weights).map(|(ch, w)| w * expected[ch.index()]).sum(),
                        children.iter().map(|ch| routed[ch.index()]).fold(f64::INFINITY, f64::min),
                    ),
                };
                expected.push(e);
                routed.push(r);
            }
            Ok((expected, routed))
        })
        .collect::<Result<Vec<_>>>()?;
    let (expected, routed): (Vec<_>, Vec<_>) = columns.into_iter().unzip();
    Ok(DistanceCache {
        num_nodes: c.len(),
        root: c.root(),
        order,
        expected: expected.concat(),
        routed: routed.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::CircuitBuilder;
    use crate::leaf::LeafDistribution::{Bernoulli, Gaussian};

    fn single(d: crate::leaf::LeafDistribution) -> Circuit {
        let mut b = CircuitBuilder::new();
        b.input(0, d);
        b.finish(1).unwrap()
    }

    #[test]
    fn leaf_values() {
        let c = single(Gaussian { mu: 0.0, sigma: 1.0 });
        let cache = inference_pass(&c, &Dataset::new(1, vec![0.0]).unwrap(), 2.0).unwrap();
        assert_eq!(cache.expected(c.root(), 0), 1.0);
        let c = single(Bernoulli { p: 0.3 });
        let cache = inference_pass(&c, &Dataset::new(1, vec![1.0]).unwrap(), 1.0).unwrap();
        assert!((cache.expected(c.root(), 0) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn out_of_support_data_is_rejected() {
        let c = single(Bernoulli { p: 0.3 });
        let data = Dataset::new(1, vec![2.0]).unwrap();
        assert!(matches!(inference_pass(&c, &data, 1.0), Err(Error::Domain { .. })));
    }

    #[test]
    fn sums_mix_or_minimize() {
        let mut b = CircuitBuilder::new();
        let l = [b.input(0, Gaussian { mu: 0.0, sigma: 1.0 }), b.input(0, Gaussian { mu: 10.0, sigma: 1.0 })];
        b.sum(l.to_vec(), vec![0.25, 0.75]);
        let c = b.finish(1).unwrap();
        let cache = inference_pass(&c, &Dataset::new(1, vec![0.0, 10.0]).unwrap(), 2.0).unwrap();
        assert_eq!(cache.expected(c.root(), 0), 0.25 * 1.0 + 0.75 * 101.0);
        assert_eq!(cache.routed(c.root(), 1), 1.0);
        assert_eq!(cache.ecw(), 1.0);
    }
}
