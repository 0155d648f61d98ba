use std::time::Instant;

use rayon::prelude::*;

use super::stopping::{naive_stop_check, overlap_stop_check, HighLowSplit};
use super::{Estimator, StopReason, Strategy, TopKConfig, TopKResult};
use crate::error::{Error, Result};
use crate::estimators::{kernel_shap_replicate, sampling_shap_replicate, EstimateSet, KernelBatchConfig};
use crate::model::ExplanationInstance;
use crate::oracle::rank_descending;
use crate::rng::Streams;

/// Dispatches on `cfg.strategy`.
pub fn run(inst: &ExplanationInstance, cfg: &TopKConfig) -> Result<TopKResult> {
    match cfg.strategy {
        Strategy::Naive => run_naive(inst, cfg),
        Strategy::OverlapUniform => run_overlap_uniform(inst, cfg),
        Strategy::OverlapGreedy => run_greedy(inst, cfg),
    }
}

/// Baseline: sample until every interval is at most `eps` wide, then return
/// the `k` largest means.
///
/// With the sampling estimator each round adds one replicate to every
/// feature whose interval is still wider than `eps`; with the kernel
/// estimator each round adds one joint replicate.
pub fn run_naive(inst: &ExplanationInstance, cfg: &TopKConfig) -> Result<TopKResult> {
    expect_strategy(cfg, Strategy::Naive)?;
    Driver::start(inst, cfg)?.run_uniform(|es, cfg| naive_stop_check(es, cfg.eps))
}

/// Same schedule as [`run_naive`], stopped by the interval-overlap test.
pub fn run_overlap_uniform(inst: &ExplanationInstance, cfg: &TopKConfig) -> Result<TopKResult> {
    expect_strategy(cfg, Strategy::OverlapUniform)?;
    Driver::start(inst, cfg)?.run_uniform(|es, cfg| overlap_stop_check(es, cfg.k, cfg.eps).0)
}

/// LUCB-style greedy allocation: after `t_min` replicates per feature, every
/// iteration adds one replicate each to `h` and `l` until
/// `beta_l - alpha_h <= eps`.
///
/// A zero-variance `h` or `l` is not trusted to end the run until it has
/// `2 * t_min` replicates, unless every interval is already at most `eps`
/// wide.
pub fn run_greedy(inst: &ExplanationInstance, cfg: &TopKConfig) -> Result<TopKResult> {
    expect_strategy(cfg, Strategy::OverlapGreedy)?;
    let mut driver = Driver::start(inst, cfg)?;
    loop {
        let (stop, split) = overlap_stop_check(&driver.es, cfg.k, cfg.eps);
        if stop && driver.boundary_trusted(&split) {
            return Ok(driver.finish(StopReason::Converged));
        }
        if driver.over_budget(4) {
            return Ok(driver.finish(StopReason::BudgetExhausted));
        }
        driver.add_sampling(split.h)?;
        driver.add_sampling(split.l)?;
    }
}

fn expect_strategy(cfg: &TopKConfig, strategy: Strategy) -> Result<()> {
    if cfg.strategy != strategy {
        return Err(Error::config(format!(
            "driver for {strategy:?} called with strategy {:?}",
            cfg.strategy
        )));
    }
    Ok(())
}

struct Driver<'a> {
    cfg: &'a TopKConfig,
    inst: ExplanationInstance,
    streams: Streams,
    kernel: KernelBatchConfig,
    es: EstimateSet,
    joint_replicates: usize,
    started: Instant,
}

impl<'a> Driver<'a> {
    /// Validates, forks the instance and draws `t_min` replicates per feature.
    fn start(inst: &ExplanationInstance, cfg: &'a TopKConfig) -> Result<Self> {
        let d = inst.d();
        cfg.validate(d)?;
        let started = Instant::now();
        let mut driver = Self {
            cfg,
            inst: inst.fork(),
            streams: Streams::new(cfg.seed),
            kernel: cfg.kernel_config(d),
            es: EstimateSet::new(d, cfg.delta)?,
            joint_replicates: 0,
            started,
        };
        match cfg.estimator {
            Estimator::Sampling => driver.seed_sampling()?,
            Estimator::Kernel => driver.seed_kernel()?,
        }
        Ok(driver)
    }

    fn seed_sampling(&mut self) -> Result<()> {
        let (inst, streams, t_min) = (&self.inst, self.streams, self.cfg.t_min);
        let draws: Vec<Vec<f64>> = (0..inst.d())
            .into_par_iter()
            .map(|i| {
                (0..t_min)
                    .map(|j| sampling_shap_replicate(inst, i, &mut streams.feature(i, j)))
                    .collect()
            })
            .collect();
        for (i, values) in draws.into_iter().enumerate() {
            for v in values {
                self.es.add_replicate(i, v)?;
            }
        }
        Ok(())
    }

    fn seed_kernel(&mut self) -> Result<()> {
        let (inst, streams, kernel) = (&self.inst, self.streams, self.kernel);
        let draws: Vec<Vec<f64>> = (0..self.cfg.t_min)
            .into_par_iter()
            .map(|j| kernel_shap_replicate(inst, &kernel, &mut streams.joint(j)))
            .collect::<Result<_>>()?;
        for phi in draws {
            self.push_joint(phi)?;
        }
        Ok(())
    }

    /// Replicate `j` of feature `i` always comes from stream `(i, j)`, so
    /// strategies sharing a seed see identical replicate sequences.
    fn add_sampling(&mut self, i: usize) -> Result<()> {
        let j = self.es.feature(i).count();
        let v = sampling_shap_replicate(&self.inst, i, &mut self.streams.feature(i, j));
        self.es.add_replicate(i, v)
    }

    fn add_joint(&mut self) -> Result<()> {
        let phi = kernel_shap_replicate(&self.inst, &self.kernel, &mut self.streams.joint(self.joint_replicates))?;
        self.push_joint(phi)
    }

    fn push_joint(&mut self, phi: Vec<f64>) -> Result<()> {
        for (i, v) in phi.into_iter().enumerate() {
            self.es.add_replicate(i, v)?;
        }
        self.joint_replicates += 1;
        Ok(())
    }

    fn over_budget(&self, next_cost: u64) -> bool {
        self.inst.evals() + next_cost > self.cfg.max_evals
    }

    /// Rounds of the non-greedy schedule, stopped by `stop`.
    fn run_uniform(mut self, stop: impl Fn(&EstimateSet, &TopKConfig) -> bool) -> Result<TopKResult> {
        loop {
            if stop(&self.es, self.cfg) {
                return Ok(self.finish(StopReason::Converged));
            }
            match self.cfg.estimator {
                Estimator::Sampling => {
                    let active: Vec<usize> = (0..self.es.len())
                        .filter(|&i| self.es.feature(i).width() > self.cfg.eps)
                        .collect();
                    if self.over_budget(2 * active.len() as u64) {
                        return Ok(self.finish(StopReason::BudgetExhausted));
                    }
                    for i in active {
                        self.add_sampling(i)?;
                    }
                }
                Estimator::Kernel => {
                    if self.over_budget(self.kernel.coalitions_per_replicate as u64) {
                        return Ok(self.finish(StopReason::BudgetExhausted));
                    }
                    self.add_joint()?;
                }
            }
        }
    }

    fn boundary_trusted(&self, split: &HighLowSplit) -> bool {
        let confirmed = |i: usize| {
            let f = self.es.feature(i);
            f.std() > 0.0 || f.count() >= 2 * self.cfg.t_min
        };
        (confirmed(split.h) && confirmed(split.l)) || naive_stop_check(&self.es, self.cfg.eps)
    }

    fn finish(self, stop_reason: StopReason) -> TopKResult {
        let mut selected = rank_descending(&self.es.means())[..self.cfg.k].to_vec();
        selected.sort_unstable();
        let per_replicate = match self.cfg.estimator {
            Estimator::Sampling => 2,
            Estimator::Kernel => self.kernel.coalitions_per_replicate as u64,
        };
        TopKResult {
            selected,
            evals: self.inst.evals(),
            per_feature_evals: self.es.counts().iter().map(|&t| t as u64 * per_replicate).collect(),
            wall_time: self.started.elapsed(),
            stop_reason,
            final_estimates: self.es,
        }
    }
}
