//! Benchmark harness: ingestion, synthetic instances, suites and reports.
//!
//! Within a suite every method runs on an instance with that instance's
//! master seed, so naive and @k columns are compared on identical replicate
//! streams.

mod dataset;
mod report;
mod suite;
mod synthetic;

use rayon::prelude::*;

pub use dataset::{load_dataset, read_numeric_csv, Dataset};
pub use report::{Cell, ExperimentReport, MethodAggregate, Speedup, SCHEMA_VERSION};
pub use suite::{InstanceSource, Method, Suite, SuiteInstance};
pub use synthetic::{gen_synthetic, random_mlp, GapProfile, SyntheticInstance, MAX_SYNTHETIC_FEATURES};

use crate::error::{Error, Result};
use crate::topk::run;

/// Runs every (instance, method) cell of the suite at the suite's `eps`.
pub fn run_benchmark(suite: &Suite) -> Result<ExperimentReport> {
    run_sensitivity(suite, &[suite.eps])
}

/// Runs the suite once per `eps` in `eps_grid` (ascending, positive).
pub fn run_sensitivity(suite: &Suite, eps_grid: &[f64]) -> Result<ExperimentReport> {
    suite.validate()?;
    if eps_grid.is_empty() {
        return Err(Error::config("eps grid is empty"));
    }
    if eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::config("eps grid values must be positive"));
    }
    if eps_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("eps grid must be strictly ascending"));
    }
    let instances = suite.resolve()?;
    let mut cells = Vec::new();
    for &eps in eps_grid {
        let at_eps = Suite { eps, ..suite.clone() };
        cells.extend(run_cells(&at_eps, &instances));
    }
    Ok(ExperimentReport::assemble(
        suite.name.clone(),
        suite.k,
        suite.delta,
        suite.t_min,
        eps_grid.to_vec(),
        suite.methods.clone(),
        cells,
    ))
}

fn run_cells(suite: &Suite, instances: &[SuiteInstance]) -> Vec<Cell> {
    let jobs: Vec<(usize, Method)> = (0..instances.len())
        .flat_map(|i| suite.methods.iter().map(move |&m| (i, m)))
        .collect();
    jobs.into_par_iter()
        .map(|(idx, method)| {
            let si = &instances[idx];
            let d = si.instance.d();
            let cfg = suite.config_for(method, si.seed);
            let kernel_coalitions = (method.estimator() == crate::topk::Estimator::Kernel)
                .then(|| cfg.kernel_config(d).coalitions_per_replicate);
            let mut cell = Cell {
                eps: suite.eps,
                instance: si.name.clone(),
                instance_index: idx,
                method,
                seed: si.seed,
                d,
                kernel_coalitions,
                sample_cost: 0,
                runtime_secs: 0.0,
                selected: Vec::new(),
                converged: false,
                error: None,
            };
            match run(&si.instance, &cfg) {
                Ok(res) => {
                    cell.sample_cost = res.evals;
                    cell.runtime_secs = res.wall_time.as_secs_f64();
                    cell.converged = res.converged();
                    cell.selected = res.selected;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_suite() -> Suite {
        serde_json::from_str(
            r#"{"name":"small","k":2,"eps":0.05,"delta":0.1,"seed":3,
                "instances":[{"source":"synthetic","d":6,"profile":"separated","seed":1,"count":2}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn single_instance_report() {
        let mut suite = small_suite();
        suite.instances = vec![InstanceSource::Synthetic { d: 6, profile: GapProfile::Separated, seed: 1, count: 1 }];
        let report = run_benchmark(&suite).unwrap();
        assert_eq!(report.cells.len(), 4);
        assert_eq!(report.aggregates.len(), 4);
        assert_eq!(report.speedups.len(), 2);
        assert!(report.speedups.iter().all(|s| s.sample_cost_ratio.is_some()));
    }

    #[test]
    fn budget_capped_cells_flagged() {
        let mut suite = small_suite();
        suite.eps = 1e-4;
        suite.max_evals = 500;
        let report = run_benchmark(&suite).unwrap();
        let naive = report.aggregate_for(1e-4, Method::SamplingNaive).unwrap();
        assert_eq!(naive.converged, 0);
        assert_eq!(naive.mean_sample_cost, None);
        assert!(report.cells.iter().filter(|c| !c.converged).all(|c| c.error.is_none()));
    }

    #[test]
    fn errors_are_recorded_per_cell() {
        let mut suite = small_suite();
        suite.kernel_coalitions = Some(3);
        let report = run_benchmark(&suite).unwrap();
        let col = report.aggregate_for(0.05, Method::KernelAtK).unwrap();
        assert!(col.column_failed);
        assert!(report.aggregate_for(0.05, Method::SamplingAtK).unwrap().converged > 0);
    }

    #[test]
    fn grid_validation() {
        let suite = small_suite();
        assert!(run_sensitivity(&suite, &[]).is_err());
        assert!(run_sensitivity(&suite, &[0.02, 0.01]).is_err());
        assert!(run_sensitivity(&suite, &[0.0, 0.01]).is_err());
        let one = run_sensitivity(&suite, &[0.05]).unwrap();
        assert_eq!(one.aggregates.len(), 4);
    }
}
