//! Per-replicate Shapley estimators and the confidence intervals built over
//! their replicates.

mod kernel;
mod linalg;
mod sampling;
mod stats;

pub use kernel::{kernel_shap_exhaustive, kernel_shap_replicate, KernelBatchConfig};
pub use sampling::sampling_shap_replicate;
pub use stats::{z_critical, EstimateSet, FeatureEstimate, FeatureSummary};
