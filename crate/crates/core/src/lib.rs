//! Optimal transport between probabilistic circuits.
//!
//! The crate computes the circuit Wasserstein distance between two
//! compatible circuits by building an optimal coupling circuit bottom-up,
//! answers transport queries on that coupling, learns circuit parameters by
//! Wasserstein minimization against a dataset, and provides exact, mixture
//! and entropic baselines for comparison.

pub mod baselines;
pub mod circuit;
pub mod compat;
pub mod coupling;
pub mod data;
pub mod error;
pub mod gen;
pub mod leaf;
pub mod learn;
pub mod math;
pub mod ot;
pub mod par;
pub mod rng;

pub use circuit::{Circuit, CircuitBuilder, Node, NodeId, Scope, VarId};
pub use data::Dataset;
pub use error::{Error, ErrorClass, Result};
pub use leaf::LeafDistribution;
