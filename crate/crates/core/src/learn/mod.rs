//! Parameter learning: Wasserstein minimization over a dataset and a
//! full-batch EM baseline.

mod cache;
mod em;
mod metrics;
mod refit;
mod wm;

pub use cache::{inference_pass, DistanceCache};
pub use em::{fit_em, fit_em_observed, EMConfig, EMFit};
pub use metrics::{bits_per_dimension, mean_log_likelihood};
pub use refit::LeafUpdate;
pub use wm::{ecw, fit_wm, fit_wm_observed, learn_pass, RoutingTable, WMConfig, WMFit};
