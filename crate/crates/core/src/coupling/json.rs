//! Coupling file format: the circuit layout over `2·v` variables (target
//! variable `y` is stored as `v + y`) with plan-valued leaves and the
//! provenance of every node.

use std::path::Path;

use serde::Serialize;

use super::{CouplingCircuit, CouplingNode};
use crate::error::Result;
use crate::leaf::LeafDistribution;
use crate::ot::LeafPlan;

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum PlanRecord<'a> {
    OtJoint { table: Vec<Vec<f64>>, source: &'a LeafDistribution, target: &'a LeafDistribution },
    OtAffine { a: f64, b: f64, source: &'a LeafDistribution, target: &'a LeafDistribution },
}

#[derive(Serialize)]
struct NodeRecord<'a> {
    id: usize,
    #[serde(rename = "type")]
    kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    vars: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dist: Option<PlanRecord<'a>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    children: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shape: Option<[usize; 2]>,
}

#[derive(Serialize)]
struct CouplingRecord<'a> {
    num_vars: usize,
    nodes: Vec<NodeRecord<'a>>,
    root: u32,
    provenance: Vec<[u32; 2]>,
    order: f64,
}

impl CouplingCircuit {
    pub fn to_json_string(&self) -> String {
        let v = self.num_vars;
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(id, node)| match node {
                CouplingNode::Leaf { x_var, y_var, source, target, plan, .. } => NodeRecord {
                    id,
                    kind: "input",
                    vars: Some([x_var.index(), v + y_var.index()]),
                    dist: Some(match plan {
                        LeafPlan::DiscreteJoint { table } => {
                            PlanRecord::OtJoint { table: table.to_nested(), source, target }
                        }
                        LeafPlan::Affine { a, b } => PlanRecord::OtAffine { a: *a, b: *b, source, target },
                    }),
                    children: None,
                    weights: None,
                    shape: None,
                },
                CouplingNode::Product { children } => NodeRecord {
                    id,
                    kind: "product",
                    vars: None,
                    dist: None,
                    children: Some(children.iter().map(|c| c.0).collect()),
                    weights: None,
                    shape: None,
                },
                CouplingNode::Sum { children, weights, .. } => NodeRecord {
                    id,
                    kind: "sum",
                    vars: None,
                    dist: None,
                    children: Some(children.iter().map(|c| c.0).collect()),
                    weights: Some(weights.data()),
                    shape: Some([weights.rows(), weights.cols()]),
                },
            })
            .collect();
        let record = CouplingRecord {
            num_vars: 2 * v,
            nodes,
            root: self.root.0,
            provenance: self.provenance.iter().map(|(p, q)| [p.0, q.0]).collect(),
            order: self.order,
        };
        serde_json::to_string_pretty(&record).expect("coupling serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}
