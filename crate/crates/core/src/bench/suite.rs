use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::dataset::load_dataset;
use super::synthetic::{gen_synthetic, GapProfile};
use crate::error::{Error, Result};
use crate::model::{load_model, ExplanationInstance};
use crate::rng::mix_seed;
use crate::topk::{Estimator, Strategy, TopKConfig, DEFAULT_MAX_EVALS, DEFAULT_T_MIN};

/// A benchmark column: estimator plus strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "sampling-naive")]
    SamplingNaive,
    #[serde(rename = "sampling@k")]
    SamplingAtK,
    #[serde(rename = "sampling-overlap")]
    SamplingOverlap,
    #[serde(rename = "kernel-naive")]
    KernelNaive,
    #[serde(rename = "kernel@k")]
    KernelAtK,
}

impl Method {
    pub const TABLE: [Method; 4] = [Method::SamplingNaive, Method::SamplingAtK, Method::KernelNaive, Method::KernelAtK];

    pub fn estimator(self) -> Estimator {
        match self {
            Method::SamplingNaive | Method::SamplingAtK | Method::SamplingOverlap => Estimator::Sampling,
            Method::KernelNaive | Method::KernelAtK => Estimator::Kernel,
        }
    }

    pub fn strategy(self) -> Strategy {
        match self {
            Method::SamplingNaive | Method::KernelNaive => Strategy::Naive,
            Method::SamplingOverlap | Method::KernelAtK => Strategy::OverlapUniform,
            Method::SamplingAtK => Strategy::OverlapGreedy,
        }
    }

    /// The naive column a method's speedup is measured against.
    pub fn baseline(self) -> Option<Method> {
        match self {
            Method::SamplingAtK | Method::SamplingOverlap => Some(Method::SamplingNaive),
            Method::KernelAtK => Some(Method::KernelNaive),
            Method::SamplingNaive | Method::KernelNaive => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::SamplingNaive => "sampling-naive",
            Method::SamplingAtK => "sampling@k",
            Method::SamplingOverlap => "sampling-overlap",
            Method::KernelNaive => "kernel-naive",
            Method::KernelAtK => "kernel@k",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSource {
    /// `count` generated instances with seeds `seed, seed + 1, ...`.
    Synthetic {
        d: usize,
        profile: GapProfile,
        #[serde(default)]
        seed: u64,
        #[serde(default = "one")]
        count: usize,
    },
    /// Rows of a user-supplied dataset explained with a model file.
    Dataset {
        model: PathBuf,
        data: PathBuf,
        baseline: PathBuf,
        /// Keep only rows whose model output is below `threshold`.
        #[serde(default)]
        negative_only: bool,
        #[serde(default = "half")]
        threshold: f64,
        #[serde(default)]
        max_rows: Option<usize>,
    },
}

fn one() -> usize {
    1
}

fn half() -> f64 {
    0.5
}

fn default_t_min() -> usize {
    DEFAULT_T_MIN
}

fn default_max_evals() -> u64 {
    DEFAULT_MAX_EVALS
}

fn default_methods() -> Vec<Method> {
    Method::TABLE.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Suite {
    #[serde(default)]
    pub name: String,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    #[serde(default = "default_t_min")]
    pub t_min: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_evals")]
    pub max_evals: u64,
    /// Coalitions per kernel replicate; `max(2d, 128)` when absent.
    #[serde(default)]
    pub kernel_coalitions: Option<usize>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    pub instances: Vec<InstanceSource>,
}

pub struct SuiteInstance {
    pub name: String,
    /// Master seed shared by every method run on this instance.
    pub seed: u64,
    pub instance: ExplanationInstance,
}

impl Suite {
    /// Reads a suite file; relative dataset paths resolve against its folder.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::Load { path: path.to_path_buf(), reason: e.to_string() })?;
        let mut suite: Suite =
            serde_json::from_str(&text).map_err(|e| Error::Load { path: path.to_path_buf(), reason: e.to_string() })?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        for src in &mut suite.instances {
            if let InstanceSource::Dataset { model, data, baseline, .. } = src {
                for p in [model, data, baseline] {
                    if p.is_relative() {
                        *p = dir.join(&*p);
                    }
                }
            }
        }
        if suite.name.is_empty() {
            suite.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        Ok(suite)
    }

    pub fn config_for(&self, method: Method, seed: u64) -> TopKConfig {
        let mut cfg = TopKConfig::new(self.k, self.eps, self.delta, method.estimator(), method.strategy())
            .with_seed(seed)
            .with_t_min(self.t_min)
            .with_max_evals(self.max_evals);
        if let Some(m) = self.kernel_coalitions {
            cfg.kernel = Some(crate::estimators::KernelBatchConfig { coalitions_per_replicate: m, include_paired: false });
        }
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::config("suite lists no methods"));
        }
        if self.instances.is_empty() {
            return Err(Error::config("suite lists no instances"));
        }
        Ok(())
    }

    /// Materialises every instance, in suite order.
    pub fn resolve(&self) -> Result<Vec<SuiteInstance>> {
        let mut out = Vec::new();
        for src in &self.instances {
            match src {
                InstanceSource::Synthetic { d, profile, seed, count } => {
                    for s in *seed..seed + *count as u64 {
                        let generated = gen_synthetic(*d, self.k, *profile, s)?;
                        out.push((format!("synthetic-{profile:?}-d{d}-s{s}").to_lowercase(), generated.instance));
                    }
                }
                InstanceSource::Dataset { model, data, baseline, negative_only, threshold, max_rows } => {
                    let model = Arc::new(load_model(model)?);
                    let ds = load_dataset(data, baseline)?;
                    let filter = negative_only.then_some(*threshold);
                    for (row, inst) in ds.instances(&model, filter, *max_rows)? {
                        out.push((format!("{}-row{row}", ds.name), inst));
                    }
                }
            }
        }
        Ok(out
            .into_iter()
            .enumerate()
            .map(|(idx, (name, instance))| SuiteInstance { name, seed: mix_seed(self.seed, idx as u64), instance })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_suite() {
        let suite: Suite = serde_json::from_str(
            r#"{"k":4,"eps":0.005,"delta":1e-6,
                "instances":[{"source":"synthetic","d":20,"profile":"separated","count":3}]}"#,
        )
        .unwrap();
        assert_eq!(suite.methods, Method::TABLE.to_vec());
        assert_eq!(suite.t_min, 10);
        let resolved = suite.resolve().unwrap();
        assert_eq!(resolved.len(), 3);
        assert_ne!(resolved[0].seed, resolved[1].seed);
    }

    #[test]
    fn method_names_round_trip() {
        for m in [Method::SamplingNaive, Method::SamplingAtK, Method::SamplingOverlap, Method::KernelNaive, Method::KernelAtK] {
            let text = serde_json::to_string(&m).unwrap();
            assert_eq!(text, format!("\"{}\"", m.name()));
            assert_eq!(serde_json::from_str::<Method>(&text).unwrap(), m);
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let err = serde_json::from_str::<Suite>(r#"{"k":1,"eps":0.1,"delta":0.1,"instances":[],"bogus":1}"#);
        assert!(err.is_err());
    }
}
