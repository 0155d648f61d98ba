use rayon::prelude::*;
use serde::Serialize;

use super::{run, TopKConfig};
use crate::error::Result;
use crate::model::ExplanationInstance;
use crate::oracle::{exact_shap, is_eps_approximate};
use crate::rng::mix_seed;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PacSummary {
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub mean_evals: f64,
}

/// Seed of trial `t` derived from the configured master seed.
pub fn trial_seed(master: u64, t: usize) -> u64 {
    mix_seed(master, t as u64)
}

/// Runs the configured driver `trials` times with independent seeds and
/// scores each selection against the exact Shapley values.
pub fn pac_trials(inst: &ExplanationInstance, cfg: &TopKConfig, trials: usize) -> Result<PacSummary> {
    let exact = exact_shap(&inst.fork())?;
    let outcomes: Vec<(bool, u64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = TopKConfig { seed: trial_seed(cfg.seed, t), ..cfg.clone() };
            let res = run(inst, &cfg)?;
            let ok = is_eps_approximate(&res.selected, &exact, cfg.k, cfg.eps)?;
            Ok((ok, res.evals))
        })
        .collect::<Result<_>>()?;
    let failures = outcomes.iter().filter(|(ok, _)| !ok).count();
    let total_evals: u64 = outcomes.iter().map(|&(_, e)| e).sum();
    Ok(PacSummary {
        trials,
        failures,
        failure_rate: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
        mean_evals: if trials == 0 { 0.0 } else { total_evals as f64 / trials as f64 },
    })
}

/// Empirical fraction of trials whose selection is not ε-approximate.
pub fn pac_trial_harness(inst: &ExplanationInstance, cfg: &TopKConfig, trials: usize) -> Result<f64> {
    Ok(pac_trials(inst, cfg, trials)?.failure_rate)
}
