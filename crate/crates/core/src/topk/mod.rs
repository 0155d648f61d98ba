//! Top-k identification drivers.
//!
//! Three strategies share one estimate store:
//!
//! - `Naive` keeps sampling until every interval is at most `eps` wide.
//! - `OverlapUniform` follows the same sampling schedule but stops as soon as
//!   the interval overlap between the current Top-k and the rest is at most
//!   `eps`.
//! - `OverlapGreedy` (sampling estimator only) spends every further replicate
//!   on the two boundary features `h` and `l`, LUCB style.

mod drivers;
mod pac;
mod stopping;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimateSet, FeatureSummary, KernelBatchConfig};

pub use drivers::{run, run_greedy, run_naive, run_overlap_uniform};
pub use pac::{pac_trial_harness, pac_trials, trial_seed, PacSummary};
pub use stopping::{naive_stop_check, overlap_stop_check, HighLowSplit};

pub const DEFAULT_T_MIN: usize = 10;
pub const DEFAULT_MAX_EVALS: u64 = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Sampling,
    Kernel,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Naive,
    OverlapUniform,
    OverlapGreedy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKConfig {
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub t_min: usize,
    pub estimator: Estimator,
    pub strategy: Strategy,
    pub max_evals: u64,
    pub seed: u64,
    /// Joint-replicate settings; defaults to [`KernelBatchConfig::for_features`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelBatchConfig>,
}

impl TopKConfig {
    pub fn new(k: usize, eps: f64, delta: f64, estimator: Estimator, strategy: Strategy) -> Self {
        Self {
            k,
            eps,
            delta,
            t_min: DEFAULT_T_MIN,
            estimator,
            strategy,
            max_evals: DEFAULT_MAX_EVALS,
            seed: 0,
            kernel: None,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_t_min(mut self, t_min: usize) -> Self {
        self.t_min = t_min;
        self
    }

    pub fn with_max_evals(mut self, max_evals: u64) -> Self {
        self.max_evals = max_evals;
        self
    }

    pub fn with_kernel(mut self, kernel: KernelBatchConfig) -> Self {
        self.kernel = Some(kernel);
        self
    }

    pub fn kernel_config(&self, d: usize) -> KernelBatchConfig {
        self.kernel.unwrap_or_else(|| KernelBatchConfig::for_features(d))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k == 0 || self.k >= d {
            return Err(Error::config(format!("k = {} must satisfy 1 <= k < d = {d}", self.k)));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::config(format!("eps = {} must be positive", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config(format!("delta = {} must lie in (0, 1)", self.delta)));
        }
        if self.t_min < 2 {
            return Err(Error::config(format!("t_min = {} must be at least 2", self.t_min)));
        }
        if self.strategy == Strategy::OverlapGreedy && self.estimator == Estimator::Kernel {
            return Err(Error::config(
                "greedy allocation needs per-feature replicates; use the sampling estimator",
            ));
        }
        if self.estimator == Estimator::Kernel {
            self.kernel_config(d).validate(d)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Converged,
    BudgetExhausted,
}

#[derive(Clone, Debug)]
pub struct TopKResult {
    /// Selected features, ascending index.
    pub selected: Vec<usize>,
    /// Model evaluations consumed by the run.
    pub evals: u64,
    /// Sampling: `2 * T_i`. Kernel: `M * T_i`, the coalitions behind feature
    /// `i`'s replicates (each joint replicate serves every feature).
    pub per_feature_evals: Vec<u64>,
    pub wall_time: Duration,
    pub stop_reason: StopReason,
    pub final_estimates: EstimateSet,
}

impl TopKResult {
    pub fn converged(&self) -> bool {
        self.stop_reason == StopReason::Converged
    }

    pub fn report(&self) -> TopKReport {
        TopKReport {
            selected: self.selected.clone(),
            evals: self.evals,
            per_feature_evals: self.per_feature_evals.clone(),
            wall_time_secs: self.wall_time.as_secs_f64(),
            stop_reason: self.stop_reason,
            estimates: self.final_estimates.summaries(),
        }
    }
}

/// Serialisable view of a [`TopKResult`] without the raw replicates.
#[derive(Clone, Debug, Serialize)]
pub struct TopKReport {
    pub selected: Vec<usize>,
    pub evals: u64,
    pub per_feature_evals: Vec<u64>,
    pub wall_time_secs: f64,
    pub stop_reason: StopReason,
    pub estimates: Vec<FeatureSummary>,
}
