//! `shapk`: Top-k Shapley explanations from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 budget exhausted before the stopping rule held.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;
use shapk::bench::{load_dataset, run_benchmark, run_sensitivity, ExperimentReport, Suite};
use shapk::model::load_model;
use shapk::{exact_shap, Error, Estimator, ExplanationInstance, KernelBatchConfig, Strategy, TopKConfig};

#[derive(Parser)]
#[command(name = "shapk", version, about = "PAC Top-k Shapley feature attribution")]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "SHAPK_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct InstanceArgs {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Headed CSV holding the input row(s).
    #[arg(long)]
    x: PathBuf,
    /// Headed one-row CSV with the baseline values.
    #[arg(long)]
    baseline: PathBuf,
    /// Which data row of `--x` to explain (0-based).
    #[arg(long, default_value_t = 0)]
    row: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Identify the k most important features of one input.
    Explain {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0.005)]
        eps: f64,
        #[arg(long, default_value_t = 1e-6)]
        delta: f64,
        #[arg(long, value_enum, default_value_t = MethodArg::Sampling)]
        method: MethodArg,
        #[arg(long, value_enum, default_value_t = StrategyArg::Greedy)]
        strategy: StrategyArg,
        #[arg(long, default_value_t = shapk::topk::DEFAULT_T_MIN)]
        tmin: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = shapk::topk::DEFAULT_MAX_EVALS)]
        max_evals: u64,
        /// Coalitions per kernel replicate; `max(2d, 128)` by default.
        #[arg(long)]
        kernel_coalitions: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact Shapley values by enumeration (at most 20 features).
    Exact {
        #[command(flatten)]
        instance: InstanceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a benchmark suite and write the JSON report plus CSV tables.
    Bench {
        #[arg(long)]
        suite: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a suite over several eps values and write the plot-ready series.
    Sweep {
        #[arg(long)]
        suite: PathBuf,
        /// Comma-separated, ascending.
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the full JSON report here.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sampling,
    Kernel,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Naive,
    Overlap,
    Greedy,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Argument(_) | Error::OracleScale { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

/// Whether every run reached its stopping rule.
type Outcome = Result<bool, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: SHAPK_THREADS must be at least 1");
            return ExitCode::from(1);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    match pool.install(|| dispatch(cli.command)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Explain { instance, k, eps, delta, method, strategy, tmin, seed, max_evals, kernel_coalitions, out } => {
            let (names, inst) = load_instance(&instance)?;
            let estimator = match method {
                MethodArg::Sampling => Estimator::Sampling,
                MethodArg::Kernel => Estimator::Kernel,
            };
            let strategy = match strategy {
                StrategyArg::Naive => Strategy::Naive,
                StrategyArg::Overlap => Strategy::OverlapUniform,
                StrategyArg::Greedy => Strategy::OverlapGreedy,
            };
            let mut cfg = TopKConfig::new(k, eps, delta, estimator, strategy)
                .with_seed(seed)
                .with_t_min(tmin)
                .with_max_evals(max_evals);
            if let Some(m) = kernel_coalitions {
                cfg = cfg.with_kernel(KernelBatchConfig { coalitions_per_replicate: m, include_paired: false });
            }
            let result = shapk::topk::run(&inst, &cfg)?;
            let selected_names: Vec<&str> = result.selected.iter().map(|&i| names[i].as_str()).collect();
            let doc = json!({
                "schema_version": shapk::bench::SCHEMA_VERSION,
                "config": cfg,
                "features": names,
                "selected_names": selected_names,
                "result": result.report(),
            });
            write_json(out.as_deref(), &doc)?;
            eprintln!(
                "{:?} after {} evals: top-{k} = {:?}",
                result.stop_reason, result.evals, selected_names
            );
            Ok(result.converged())
        }
        Command::Exact { instance, out } => {
            let (names, inst) = load_instance(&instance)?;
            let es = exact_shap(&inst)?;
            let doc = json!({
                "schema_version": shapk::bench::SCHEMA_VERSION,
                "features": names,
                "phi": es.phi,
                "efficiency_gap": es.efficiency_gap,
                "evals": inst.evals(),
            });
            write_json(out.as_deref(), &doc)?;
            Ok(true)
        }
        Command::Bench { suite, out } => {
            let suite = load_suite(&suite)?;
            let report = run_benchmark(&suite)?;
            write_json(Some(&out), &report)?;
            report.write_cells_csv(fs::File::create(sibling(&out, "cells.csv"))?)?;
            report.write_series_csv(fs::File::create(sibling(&out, "summary.csv"))?)?;
            summarize(&report);
            Ok(all_converged(&report))
        }
        Command::Sweep { suite, eps, out, report: report_path } => {
            let suite = load_suite(&suite)?;
            let report = run_sensitivity(&suite, &eps)?;
            report.write_series_csv(fs::File::create(&out)?)?;
            if let Some(path) = report_path {
                write_json(Some(&path), &report)?;
            }
            summarize(&report);
            Ok(all_converged(&report))
        }
    }
}

fn load_instance(args: &InstanceArgs) -> Result<(Vec<String>, ExplanationInstance), Failure> {
    let model = Arc::new(load_model(&args.model)?);
    let ds = load_dataset(&args.x, &args.baseline)?;
    if model.input_dim() != ds.d() {
        return Err(Failure::Data(format!(
            "model expects {} features but {} has {}",
            model.input_dim(),
            args.x.display(),
            ds.d()
        )));
    }
    let Some(row) = ds.rows.get(args.row) else {
        return Err(Failure::Data(format!("{} has {} rows, asked for row {}", args.x.display(), ds.rows.len(), args.row)));
    };
    let inst = ExplanationInstance::new(model, row.clone(), ds.baseline_row.clone())?;
    Ok((ds.features, inst))
}

/// A malformed suite file is a configuration problem, not a data problem.
fn load_suite(path: &Path) -> Result<Suite, Failure> {
    Suite::load(path).map_err(|e| match e {
        Error::Load { .. } => Failure::Usage(e.to_string()),
        other => other.into(),
    })
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(path: Option<&Path>, value: &impl serde::Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Data(e.to_string()))?;
    match path {
        Some(p) => fs::write(p, text + "\n")?,
        None => {
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "{text}")?;
        }
    }
    Ok(())
}

fn all_converged(report: &ExperimentReport) -> bool {
    report.cells.iter().all(|c| c.converged || c.error.is_some())
}

fn summarize(report: &ExperimentReport) {
    for a in &report.aggregates {
        let speedup = report
            .speedup_for(a.eps, a.method)
            .and_then(|s| s.sample_cost_ratio)
            .map(|r| format!("  x{r:.2}"))
            .unwrap_or_default();
        let cost = a.mean_sample_cost.map(|c| format!("{c:.0}")).unwrap_or_else(|| "-".into());
        let flag = if a.column_failed { "  FAILED" } else { "" };
        eprintln!(
            "eps={:<8} {:<16} {}/{} converged  mean evals {cost}{speedup}{flag}",
            a.eps, a.method, a.converged, a.cells
        );
    }
}
