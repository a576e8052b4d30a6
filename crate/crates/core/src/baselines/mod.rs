//! Reference distances between circuits and rank statistics.

mod exact;
mod mixture;
mod sampled;
mod stats;

pub use exact::{enumerate_distribution, exact_wasserstein, EXACT_CELL_CAP, EXACT_SUPPORT_CAP};
pub use mixture::{mixture_wasserstein, unroll, unroll_with_cap, Component, MixtureForm, MIXTURE_CELL_CAP, UNROLL_CAP};
pub use sampled::sinkhorn_between_circuits;
pub use stats::{kendall_tau, pearson};
