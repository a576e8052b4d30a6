//! Optimal transport primitives: closed-form univariate distances, an exact
//! transportation solver and the entropic Sinkhorn solver.

mod leaf;
mod matrix;
mod sinkhorn;
mod transport;

pub use leaf::{leaf_wasserstein, LeafPlan, LeafTransport};
pub use matrix::Matrix;
pub use sinkhorn::{sinkhorn, SinkhornConfig, SinkhornResult};
pub use transport::{solve_transportation, TransportationPlan, TransportationProblem, MARGINAL_TOLERANCE};
