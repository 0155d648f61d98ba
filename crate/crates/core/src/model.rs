//! The black-box model `f: R^d -> R` and the interventional value function
//! `v(S) = f(x_S)` that every estimator consumes.

use std::fmt;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    #[default]
    None,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
            Activation::None => v,
        }
    }
}

/// Which scalar of a binary classifier is attributed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputScale {
    /// The raw final-layer value.
    #[default]
    Logit,
    /// `sigmoid` of the raw value.
    Prob,
}

impl OutputScale {
    fn apply(self, raw: f64) -> f64 {
        match self {
            OutputScale::Logit => raw,
            OutputScale::Prob => 1.0 / (1.0 + (-raw).exp()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    weights: Vec<f64>,
    intercept: f64,
    output: OutputScale,
}

/// Fully connected layer computing `act(W z + b)`; `W` is stored row-major
/// with one row per output unit.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Self {
        Self { weights, bias, activation }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn out_dim(&self) -> usize {
        self.weights.len()
    }

    /// Row-major `out_dim x in_dim`.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(row, b)| {
                let s: f64 = row.iter().zip(input).map(|(w, z)| w * z).sum();
                self.activation.apply(s + b)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    output: OutputScale,
}

/// One monomial `coef * prod_{j in features} (z_j - center_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coef: f64,
    pub features: Vec<usize>,
}

/// Polynomial in the centred inputs `z - center`.
///
/// When the explained baseline equals `center`, every monomial is a scaled
/// unanimity game, so its Shapley values are known in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticModel {
    input_dim: usize,
    center: Vec<f64>,
    terms: Vec<Term>,
    output: OutputScale,
}

impl SyntheticModel {
    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    fn evaluate_unchecked(&self, z: &[f64]) -> f64 {
        let raw = self
            .terms
            .iter()
            .map(|t| {
                t.features
                    .iter()
                    .fold(t.coef, |acc, &j| acc * (z[j] - self.center[j]))
            })
            .sum();
        self.output.apply(raw)
    }

    /// Each monomial with nonzero value at `x` splits its value equally
    /// among its features.
    fn analytic_shap(&self, x: &[f64]) -> Vec<f64> {
        let mut phi = vec![0.0; self.input_dim];
        for t in &self.terms {
            if t.features.is_empty() {
                continue;
            }
            let value = t
                .features
                .iter()
                .fold(t.coef, |acc, &j| acc * (x[j] - self.center[j]));
            let share = value / t.features.len() as f64;
            for &j in &t.features {
                phi[j] += share;
            }
        }
        phi
    }
}

/// A validated black-box model. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelFile", into = "ModelFile")]
pub enum ModelSpec {
    Linear(LinearModel),
    Mlp(Mlp),
    Synthetic(SyntheticModel),
}

impl ModelSpec {
    pub fn linear(weights: Vec<f64>, intercept: f64) -> Result<Self> {
        Self::linear_with_output(weights, intercept, OutputScale::Logit)
    }

    pub fn linear_with_output(
        weights: Vec<f64>,
        intercept: f64,
        output: OutputScale,
    ) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::config("linear model needs at least one coefficient"));
        }
        check_finite(&weights, "linear coefficients")?;
        check_finite(&[intercept], "linear intercept")?;
        Ok(ModelSpec::Linear(LinearModel { weights, intercept, output }))
    }

    pub fn mlp(input_dim: usize, layers: Vec<DenseLayer>, output: OutputScale) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::config("mlp input_dim must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::config("mlp needs at least one layer"));
        }
        let mut expected_in = input_dim;
        for (idx, layer) in layers.iter().enumerate() {
            if layer.weights.is_empty() {
                return Err(Error::config(format!("layer {idx} has no output units")));
            }
            if let Some(row) = layer.weights.iter().position(|r| r.len() != expected_in) {
                return Err(Error::config(format!(
                    "layer {idx} row {row} has {} inputs, expected {expected_in}",
                    layer.weights[row].len()
                )));
            }
            if layer.bias.len() != layer.out_dim() {
                return Err(Error::config(format!(
                    "layer {idx} bias has length {}, expected {}",
                    layer.bias.len(),
                    layer.out_dim()
                )));
            }
            for row in &layer.weights {
                check_finite(row, "mlp weights")?;
            }
            check_finite(&layer.bias, "mlp bias")?;
            expected_in = layer.out_dim();
        }
        if expected_in != 1 {
            return Err(Error::config(format!(
                "final layer must produce one scalar, produces {expected_in}"
            )));
        }
        Ok(ModelSpec::Mlp(Mlp { input_dim, layers, output }))
    }

    /// Polynomial model; `center` defaults to the origin when `None`.
    pub fn synthetic(
        input_dim: usize,
        center: Option<Vec<f64>>,
        terms: Vec<Term>,
        output: OutputScale,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::config("synthetic input_dim must be positive"));
        }
        let center = center.unwrap_or_else(|| vec![0.0; input_dim]);
        if center.len() != input_dim {
            return Err(Error::config(format!(
                "synthetic center has length {}, expected {input_dim}",
                center.len()
            )));
        }
        check_finite(&center, "synthetic center")?;
        for (idx, term) in terms.iter().enumerate() {
            check_finite(&[term.coef], "synthetic coefficient")?;
            let mut seen = term.features.clone();
            seen.sort_unstable();
            seen.dedup();
            if seen.len() != term.features.len() {
                return Err(Error::config(format!("term {idx} repeats a feature")));
            }
            if let Some(&j) = seen.last().filter(|&&j| j >= input_dim) {
                return Err(Error::config(format!(
                    "term {idx} references feature {j} >= input_dim {input_dim}"
                )));
            }
        }
        Ok(ModelSpec::Synthetic(SyntheticModel { input_dim, center, terms, output }))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            ModelSpec::Linear(m) => m.weights.len(),
            ModelSpec::Mlp(m) => m.input_dim,
            ModelSpec::Synthetic(m) => m.input_dim,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Linear(_) => "linear",
            ModelSpec::Mlp(_) => "mlp",
            ModelSpec::Synthetic(_) => "synthetic",
        }
    }

    pub fn output(&self) -> OutputScale {
        match self {
            ModelSpec::Linear(m) => m.output,
            ModelSpec::Mlp(m) => m.output,
            ModelSpec::Synthetic(m) => m.output,
        }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        match self {
            ModelSpec::Mlp(m) => &m.layers,
            _ => &[],
        }
    }

    /// Forward pass.
    pub fn evaluate(&self, input: &[f64]) -> Result<f64> {
        if input.len() != self.input_dim() {
            return Err(Error::config(format!(
                "model expects {} inputs, got {}",
                self.input_dim(),
                input.len()
            )));
        }
        Ok(self.evaluate_unchecked(input))
    }

    fn evaluate_unchecked(&self, input: &[f64]) -> f64 {
        match self {
            ModelSpec::Linear(m) => {
                let raw = m.weights.iter().zip(input).map(|(w, z)| w * z).sum::<f64>() + m.intercept;
                m.output.apply(raw)
            }
            ModelSpec::Mlp(m) => {
                let mut act = m.layers[0].forward(input);
                for layer in &m.layers[1..] {
                    act = layer.forward(&act);
                }
                m.output.apply(act[0])
            }
            ModelSpec::Synthetic(m) => m.evaluate_unchecked(input),
        }
    }

    /// Closed-form interventional Shapley values, where they exist: linear
    /// models on the logit scale, and synthetic polynomials explained against
    /// their own center.
    pub fn analytic_shap(&self, x: &[f64], baseline: &[f64]) -> Option<Vec<f64>> {
        let d = self.input_dim();
        if x.len() != d || baseline.len() != d || self.output() != OutputScale::Logit {
            return None;
        }
        match self {
            ModelSpec::Linear(m) => Some(
                m.weights
                    .iter()
                    .zip(x.iter().zip(baseline))
                    .map(|(w, (xi, bi))| w * (xi - bi))
                    .collect(),
            ),
            ModelSpec::Synthetic(m) if m.center.as_slice() == baseline => Some(m.analytic_shap(x)),
            _ => None,
        }
    }
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(v) => Err(Error::config(format!("{what} contain non-finite value {v}"))),
        None => Ok(()),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum ModelFile {
    Linear {
        w: Vec<f64>,
        #[serde(default)]
        b: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        input_dim: Option<usize>,
        #[serde(default)]
        output: OutputScale,
    },
    Mlp {
        input_dim: usize,
        layers: Vec<LayerFile>,
        #[serde(default)]
        output: OutputScale,
    },
    Synthetic {
        input_dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
        terms: Vec<Term>,
        #[serde(default)]
        output: OutputScale,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerFile {
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
    #[serde(default)]
    act: Activation,
}

impl TryFrom<ModelFile> for ModelSpec {
    type Error = Error;

    fn try_from(file: ModelFile) -> Result<Self> {
        match file {
            ModelFile::Linear { w, b, input_dim, output } => {
                if let Some(n) = input_dim.filter(|&n| n != w.len()) {
                    return Err(Error::config(format!(
                        "linear input_dim {n} does not match {} coefficients",
                        w.len()
                    )));
                }
                ModelSpec::linear_with_output(w, b, output)
            }
            ModelFile::Mlp { input_dim, layers, output } => ModelSpec::mlp(
                input_dim,
                layers
                    .into_iter()
                    .map(|l| DenseLayer::new(l.w, l.b, l.act))
                    .collect(),
                output,
            ),
            ModelFile::Synthetic { input_dim, center, terms, output } => {
                ModelSpec::synthetic(input_dim, center, terms, output)
            }
        }
    }
}

impl From<ModelSpec> for ModelFile {
    fn from(spec: ModelSpec) -> Self {
        match spec {
            ModelSpec::Linear(m) => ModelFile::Linear {
                input_dim: Some(m.weights.len()),
                w: m.weights,
                b: m.intercept,
                output: m.output,
            },
            ModelSpec::Mlp(m) => ModelFile::Mlp {
                input_dim: m.input_dim,
                layers: m
                    .layers
                    .into_iter()
                    .map(|l| LayerFile { w: l.weights, b: l.bias, act: l.activation })
                    .collect(),
                output: m.output,
            },
            ModelSpec::Synthetic(m) => ModelFile::Synthetic {
                input_dim: m.input_dim,
                center: Some(m.center),
                terms: m.terms,
                output: m.output,
            },
        }
    }
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelSpec> {
    let path = path.as_ref();
    let load_err = |reason: String| Error::Load { path: path.to_path_buf(), reason };
    let text = fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| load_err(e.to_string()))
}

pub fn save_model(model: &ModelSpec, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(model)?;
    fs::write(path, text)?;
    Ok(())
}

/// Set of "present" features `S ⊆ {0..d-1}`.
///
/// Stored as a bitmask when `d <= 63`, otherwise as a sorted index list.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Coalition {
    d: usize,
    members: Members,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Members {
    Mask(u64),
    Sorted(Vec<usize>),
}

pub const MASK_LIMIT: usize = 63;

impl Coalition {
    pub fn empty(d: usize) -> Self {
        let members = if d <= MASK_LIMIT {
            Members::Mask(0)
        } else {
            Members::Sorted(Vec::new())
        };
        Self { d, members }
    }

    pub fn full(d: usize) -> Self {
        let members = if d <= MASK_LIMIT {
            Members::Mask(low_bits(d))
        } else {
            Members::Sorted((0..d).collect())
        };
        Self { d, members }
    }

    pub fn from_mask(d: usize, mask: u64) -> Result<Self> {
        if d > MASK_LIMIT {
            return Err(Error::argument(format!("bitmask coalitions need d <= {MASK_LIMIT}")));
        }
        if mask & !low_bits(d) != 0 {
            return Err(Error::argument(format!("mask {mask:#x} has bits beyond d = {d}")));
        }
        Ok(Self { d, members: Members::Mask(mask) })
    }

    pub fn from_indices(d: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut idx: Vec<usize> = indices.into_iter().collect();
        let n = idx.len();
        idx.sort_unstable();
        idx.dedup();
        if idx.len() != n {
            return Err(Error::argument("coalition has duplicate features"));
        }
        if let Some(&j) = idx.last().filter(|&&j| j >= d) {
            return Err(Error::argument(format!("feature {j} out of range for d = {d}")));
        }
        let members = if d <= MASK_LIMIT {
            Members::Mask(idx.iter().fold(0u64, |m, &j| m | (1 << j)))
        } else {
            Members::Sorted(idx)
        };
        Ok(Self { d, members })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn contains(&self, i: usize) -> bool {
        match &self.members {
            Members::Mask(m) => i < 64 && m & (1 << i) != 0,
            Members::Sorted(v) => v.binary_search(&i).is_ok(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.members {
            Members::Mask(m) => m.count_ones() as usize,
            Members::Sorted(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// This coalition plus feature `i`.
    pub fn with(&self, i: usize) -> Self {
        assert!(i < self.d, "feature {i} out of range for d = {}", self.d);
        let members = match &self.members {
            Members::Mask(m) => Members::Mask(m | (1 << i)),
            Members::Sorted(v) => {
                let mut v = v.clone();
                if let Err(pos) = v.binary_search(&i) {
                    v.insert(pos, i);
                }
                Members::Sorted(v)
            }
        };
        Self { d: self.d, members }
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.d).filter(move |&j| self.contains(j))
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

fn low_bits(d: usize) -> u64 {
    if d >= 64 {
        u64::MAX
    } else {
        (1u64 << d) - 1
    }
}

/// A model together with the input being explained and the baseline that
/// stands in for absent features.
///
/// Every evaluation of the value function goes through the instance and is
/// counted. [`ExplanationInstance::fork`] gives a driver its own counter and
/// anchor cache while sharing the model and vectors.
pub struct ExplanationInstance {
    model: Arc<ModelSpec>,
    x: Arc<[f64]>,
    baseline: Arc<[f64]>,
    evals: AtomicU64,
    empty_value: OnceLock<f64>,
    full_value: OnceLock<f64>,
}

impl ExplanationInstance {
    pub fn new(model: Arc<ModelSpec>, x: Vec<f64>, baseline: Vec<f64>) -> Result<Self> {
        let d = model.input_dim();
        if d == 0 {
            return Err(Error::config("instance needs at least one feature"));
        }
        if x.len() != d || baseline.len() != d {
            return Err(Error::config(format!(
                "model has {d} inputs but x has {} and baseline has {}",
                x.len(),
                baseline.len()
            )));
        }
        check_finite(&x, "input values")?;
        check_finite(&baseline, "baseline values")?;
        Ok(Self {
            model,
            x: x.into(),
            baseline: baseline.into(),
            evals: AtomicU64::new(0),
            empty_value: OnceLock::new(),
            full_value: OnceLock::new(),
        })
    }

    /// Same model, input and baseline with a zeroed counter and empty cache.
    pub fn fork(&self) -> Self {
        Self {
            model: Arc::clone(&self.model),
            x: Arc::clone(&self.x),
            baseline: Arc::clone(&self.baseline),
            evals: AtomicU64::new(0),
            empty_value: OnceLock::new(),
            full_value: OnceLock::new(),
        }
    }

    pub fn d(&self) -> usize {
        self.x.len()
    }

    pub fn model(&self) -> &ModelSpec {
        &self.model
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    /// Model evaluations made through this instance so far.
    pub fn evals(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    /// `v(S) = f(z)` with `z_j = x_j` for `j in S`, `baseline_j` otherwise.
    ///
    /// Panics if `S` was built for a different feature count.
    pub fn value_of_coalition(&self, s: &Coalition) -> f64 {
        assert_eq!(s.d(), self.d(), "coalition built for a different d");
        let z: Vec<f64> = (0..self.d())
            .map(|j| if s.contains(j) { self.x[j] } else { self.baseline[j] })
            .collect();
        self.value_at(&z)
    }

    /// Counted evaluation at an already-masked point.
    pub(crate) fn value_at(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.d());
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.model.evaluate_unchecked(z)
    }

    /// `(v(∅), v(D))`, evaluated once per instance and cached.
    pub fn anchor_values(&self) -> (f64, f64) {
        let empty = *self
            .empty_value
            .get_or_init(|| self.value_of_coalition(&Coalition::empty(self.d())));
        let full = *self
            .full_value
            .get_or_init(|| self.value_of_coalition(&Coalition::full(self.d())));
        (empty, full)
    }

    pub fn analytic_shap(&self) -> Option<Vec<f64>> {
        self.model.analytic_shap(&self.x, &self.baseline)
    }
}

impl fmt::Debug for ExplanationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExplanationInstance")
            .field("kind", &self.model.kind())
            .field("d", &self.d())
            .field("evals", &self.evals())
            .finish()
    }
}
