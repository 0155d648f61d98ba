//! Shapley feature attribution for black-box tabular models, with drivers
//! that identify the `k` highest-attribution features under an
//! (ε, δ)-PAC guarantee.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: the black-box `f`, the explained instance and the
//!   interventional value function `v(S)`.
//! - [`oracle`]: brute-force exact Shapley values, used as ground truth.
//! - [`estimators`]: permutation-sampling and kernel-regression replicates
//!   plus the per-feature confidence intervals built from them.
//! - [`topk`]: naive, overlap and greedy (LUCB-style) stopping drivers.
//! - [`bench`]: dataset ingestion, synthetic instances, benchmark suites.

// `!(x > y)` is used on purpose so that NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod error;
pub mod estimators;
pub mod model;
pub mod oracle;
pub mod rng;
pub mod topk;

pub use error::{Error, Result};
pub use estimators::{EstimateSet, KernelBatchConfig};
pub use model::{Coalition, ExplanationInstance, ModelSpec};
pub use oracle::{exact_shap, exact_topk, ExactShap, ExactTopK};
pub use topk::{Estimator, Strategy, StopReason, TopKConfig, TopKResult};
