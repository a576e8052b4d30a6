//! Circuit file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Circuit, Node, NodeId, VarId};
use crate::error::{Error, Result};
use crate::leaf::LeafDistribution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum NodeType {
    Input,
    Sum,
    Product,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct NodeRecord {
    id: u32,
    #[serde(rename = "type")]
    kind: NodeType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    var: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dist: Option<LeafDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    children: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

/// Serialized form of a circuit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircuitJson {
    num_vars: usize,
    nodes: Vec<NodeRecord>,
    root: u32,
}

impl From<&Circuit> for CircuitJson {
    fn from(c: &Circuit) -> Self {
        let nodes = c
            .nodes
            .iter()
            .enumerate()
            .map(|(i, node)| {
                let id = i as u32;
                match node {
                    Node::Input { var, dist } => NodeRecord {
                        id,
                        kind: NodeType::Input,
                        var: Some(var.0),
                        dist: Some(dist.clone()),
                        children: None,
                        weights: None,
                    },
                    Node::Sum { children, weights } => NodeRecord {
                        id,
                        kind: NodeType::Sum,
                        var: None,
                        dist: None,
                        children: Some(children.iter().map(|c| c.0).collect()),
                        weights: Some(weights.clone()),
                    },
                    Node::Product { children } => NodeRecord {
                        id,
                        kind: NodeType::Product,
                        var: None,
                        dist: None,
                        children: Some(children.iter().map(|c| c.0).collect()),
                        weights: None,
                    },
                }
            })
            .collect();
        CircuitJson { num_vars: c.num_vars, nodes, root: c.root.0 }
    }
}

impl TryFrom<CircuitJson> for Circuit {
    type Error = Error;

    fn try_from(json: CircuitJson) -> Result<Circuit> {
        let n = json.nodes.len();
        let mut slots: Vec<Option<Node>> = vec![None; n];
        for rec in json.nodes {
            let id = rec.id as usize;
            if id >= n || slots[id].is_some() {
                return Err(Error::Format(format!("node ids must be a permutation of 0..{n}; bad id {id}")));
            }
            let missing = |field: &str| Error::Format(format!("{:?} node {id} lacks \"{field}\"", rec.kind));
            let node = match rec.kind {
                NodeType::Input => Node::Input {
                    var: VarId(rec.var.ok_or_else(|| missing("var"))?),
                    dist: rec.dist.ok_or_else(|| missing("dist"))?,
                },
                NodeType::Sum => Node::Sum {
                    children: rec.children.ok_or_else(|| missing("children"))?.into_iter().map(NodeId).collect(),
                    weights: rec.weights.ok_or_else(|| missing("weights"))?,
                },
                NodeType::Product => Node::Product {
                    children: rec.children.ok_or_else(|| missing("children"))?.into_iter().map(NodeId).collect(),
                },
            };
            slots[id] = Some(node);
        }
        let nodes = slots.into_iter().map(|s| s.expect("every slot filled")).collect();
        Circuit::new(json.num_vars, nodes, NodeId(json.root))
    }
}

impl Circuit {
    pub fn from_json_str(s: &str) -> Result<Circuit> {
        let json: CircuitJson = serde_json::from_str(s).map_err(|e| Error::Format(format!("circuit json: {e}")))?;
        Circuit::try_from(json)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&CircuitJson::from(self)).expect("circuit serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Circuit> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Circuit::from_json_str(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json_string() + "\n")?;
        Ok(())
    }
}
