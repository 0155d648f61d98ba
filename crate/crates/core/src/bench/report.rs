use std::io::Write;

use serde::{Deserialize, Serialize};

use super::suite::Method;
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One driver run: an instance under one method at one `eps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub eps: f64,
    pub instance: String,
    pub instance_index: usize,
    pub method: Method,
    pub seed: u64,
    pub d: usize,
    /// Coalitions per joint replicate, for kernel methods.
    pub kernel_coalitions: Option<usize>,
    pub sample_cost: u64,
    pub runtime_secs: f64,
    pub selected: Vec<usize>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodAggregate {
    pub eps: f64,
    pub method: Method,
    pub cells: usize,
    pub converged: usize,
    pub errors: usize,
    /// Means over converged cells only.
    pub mean_sample_cost: Option<f64>,
    pub mean_runtime_secs: Option<f64>,
    /// Every cell of this column errored.
    pub column_failed: bool,
}

/// `mean cost(baseline) / mean cost(method)` over instances where both
/// converged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Speedup {
    pub eps: f64,
    pub method: Method,
    pub baseline: Method,
    pub pairs: usize,
    pub sample_cost_ratio: Option<f64>,
    pub runtime_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub suite: String,
    pub k: usize,
    pub delta: f64,
    pub t_min: usize,
    pub eps_grid: Vec<f64>,
    pub methods: Vec<Method>,
    pub cells: Vec<Cell>,
    pub aggregates: Vec<MethodAggregate>,
    pub speedups: Vec<Speedup>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub(crate) fn aggregate(cells: &[Cell], eps_grid: &[f64], methods: &[Method]) -> (Vec<MethodAggregate>, Vec<Speedup>) {
    let mut aggregates = Vec::new();
    let mut speedups = Vec::new();
    for &eps in eps_grid {
        for &method in methods {
            let column: Vec<&Cell> = cells.iter().filter(|c| c.eps == eps && c.method == method).collect();
            let ok = || column.iter().filter(|c| c.converged);
            let errors = column.iter().filter(|c| c.error.is_some()).count();
            aggregates.push(MethodAggregate {
                eps,
                method,
                cells: column.len(),
                converged: ok().count(),
                errors,
                mean_sample_cost: mean(ok().map(|c| c.sample_cost as f64)),
                mean_runtime_secs: mean(ok().map(|c| c.runtime_secs)),
                column_failed: !column.is_empty() && errors == column.len(),
            });

            let Some(baseline) = method.baseline().filter(|b| methods.contains(b)) else { continue };
            let pairs: Vec<(&Cell, &Cell)> = column
                .iter()
                .filter(|c| c.converged)
                .filter_map(|c| {
                    cells
                        .iter()
                        .find(|b| b.eps == eps && b.method == baseline && b.instance_index == c.instance_index && b.converged)
                        .map(|b| (*c, b))
                })
                .collect();
            let ratio = |f: fn(&Cell) -> f64| {
                let num = mean(pairs.iter().map(|(_, b)| f(b)))?;
                let den = mean(pairs.iter().map(|(c, _)| f(c)))?;
                (den > 0.0).then(|| num / den)
            };
            speedups.push(Speedup {
                eps,
                method,
                baseline,
                pairs: pairs.len(),
                sample_cost_ratio: ratio(|c| c.sample_cost as f64),
                runtime_ratio: ratio(|c| c.runtime_secs),
            });
        }
    }
    (aggregates, speedups)
}

impl ExperimentReport {
    pub fn assemble(suite: String, k: usize, delta: f64, t_min: usize, eps_grid: Vec<f64>, methods: Vec<Method>, cells: Vec<Cell>) -> Self {
        let (aggregates, speedups) = aggregate(&cells, &eps_grid, &methods);
        Self {
            schema_version: SCHEMA_VERSION,
            suite,
            k,
            delta,
            t_min,
            eps_grid,
            methods,
            cells,
            aggregates,
            speedups,
        }
    }

    pub fn aggregate_for(&self, eps: f64, method: Method) -> Option<&MethodAggregate> {
        self.aggregates.iter().find(|a| a.eps == eps && a.method == method)
    }

    pub fn speedup_for(&self, eps: f64, method: Method) -> Option<&Speedup> {
        self.speedups.iter().find(|s| s.eps == eps && s.method == method)
    }

    pub fn cell(&self, eps: f64, method: Method, instance_index: usize) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.eps == eps && c.method == method && c.instance_index == instance_index)
    }

    /// Aggregates recomputed from the cells; equal to `self.aggregates` and
    /// `self.speedups` for an untampered report.
    pub fn recompute(&self) -> (Vec<MethodAggregate>, Vec<Speedup>) {
        aggregate(&self.cells, &self.eps_grid, &self.methods)
    }

    /// One row per (eps, method): the plot-ready sensitivity series.
    pub fn write_series_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "eps",
            "method",
            "cells",
            "converged",
            "mean_sample_cost",
            "mean_runtime_secs",
            "sample_cost_ratio_vs_baseline",
            "runtime_ratio_vs_baseline",
        ])
        .map_err(csv_err)?;
        for a in &self.aggregates {
            let speedup = self.speedup_for(a.eps, a.method);
            w.write_record([
                a.eps.to_string(),
                a.method.to_string(),
                a.cells.to_string(),
                a.converged.to_string(),
                opt(a.mean_sample_cost),
                opt(a.mean_runtime_secs),
                opt(speedup.and_then(|s| s.sample_cost_ratio)),
                opt(speedup.and_then(|s| s.runtime_ratio)),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_cells_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "eps",
            "instance",
            "method",
            "seed",
            "d",
            "kernel_coalitions",
            "sample_cost",
            "runtime_secs",
            "selected",
            "converged",
            "error",
        ])
        .map_err(csv_err)?;
        for c in &self.cells {
            let selected: Vec<String> = c.selected.iter().map(usize::to_string).collect();
            w.write_record([
                c.eps.to_string(),
                c.instance.clone(),
                c.method.to_string(),
                c.seed.to_string(),
                c.d.to_string(),
                c.kernel_coalitions.map(|m| m.to_string()).unwrap_or_default(),
                c.sample_cost.to_string(),
                c.runtime_secs.to_string(),
                selected.join(" "),
                c.converged.to_string(),
                c.error.clone().unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> crate::error::Error {
    crate::error::Error::data(format!("writing csv: {e}"))
}
