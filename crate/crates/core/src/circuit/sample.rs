//! Ancestral sampling.

use rand::Rng;

use super::{Circuit, Node, NodeId};
use crate::data::Dataset;
use crate::error::Result;
use crate::par::*;
use crate::rng::SeedTree;

const CHUNK: usize = 1024;

impl Circuit {
    /// `n` i.i.d. samples. Rows are generated in fixed-size chunks, each
    /// with its own stream, so output does not depend on thread count.
    pub fn sample(&self, seed: u64, n: usize) -> Result<Dataset> {
        self.require_smooth_decomposable()?;
        let v = self.num_vars;
        let tree = SeedTree::new(seed).child("sample");
        let mut values = vec![0.0; n * v];
        if v > 0 {
            values
                .par_chunks_mut(CHUNK * v)
                .enumerate()
                .for_each(|(chunk, rows)| {
                    let mut rng = tree.stream(chunk as u64);
                    for row in rows.chunks_mut(v) {
                        self.sample_into(&mut rng, row);
                    }
                });
        }
        Ok(Dataset::new(v, values).expect("shape is consistent"))
    }

    pub(crate) fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64]) {
        let mut stack: Vec<NodeId> = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id.index()] {
                Node::Input { var, dist } => row[var.index()] = dist.sample(rng),
                Node::Product { children } => stack.extend(children.iter().rev()),
                Node::Sum { children, weights } => {
                    stack.push(children[pick(rng, weights)]);
                }
            }
        }
    }
}

/// Index drawn proportionally to `weights`.
pub(crate) fn pick<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
