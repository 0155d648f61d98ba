use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-sided standard-normal critical value: `Z` with `P(|N(0,1)| > Z) = p`.
pub fn z_critical(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::argument(format!("confidence parameter {p} must lie in (0, 1)")));
    }
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    // Lower-tail form keeps precision for tiny p.
    Ok(-normal.inverse_cdf(p / 2.0))
}

/// Replicates and running CLT interval for one feature.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FeatureEstimate {
    replicates: Vec<f64>,
    mean: f64,
    m2: f64,
    lower: f64,
    upper: f64,
}

impl FeatureEstimate {
    fn new() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
            ..Self::default()
        }
    }

    /// A summary-only estimate (no stored replicates), for inspecting the
    /// stopping rules against hand-written intervals.
    pub fn from_summary(count: usize, mean: f64, lower: f64, upper: f64) -> Self {
        Self {
            replicates: vec![mean; count],
            mean,
            m2: 0.0,
            lower,
            upper,
        }
    }

    fn push(&mut self, value: f64, z: f64) {
        self.replicates.push(value);
        let n = self.replicates.len() as f64;
        let delta = value - self.mean;
        self.mean += delta / n;
        self.m2 += delta * (value - self.mean);
        if self.replicates.len() < 2 {
            self.lower = f64::NEG_INFINITY;
            self.upper = f64::INFINITY;
        } else {
            let half = z * self.std() / n.sqrt();
            self.lower = self.mean - half;
            self.upper = self.mean + half;
        }
    }

    pub fn count(&self) -> usize {
        self.replicates.len()
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Bessel-corrected sample standard deviation; NaN below two replicates.
    pub fn std(&self) -> f64 {
        match self.replicates.len() {
            0 | 1 => f64::NAN,
            n => (self.m2.max(0.0) / (n - 1) as f64).sqrt(),
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn replicates(&self) -> &[f64] {
        &self.replicates
    }

    pub fn summary(&self) -> FeatureSummary {
        FeatureSummary {
            count: self.count(),
            mean: self.mean,
            std: self.std(),
            lower: self.lower,
            upper: self.upper,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureSummary {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub lower: f64,
    pub upper: f64,
}

/// Per-feature replicate sets with intervals at confidence `delta / d`.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimateSet {
    z: f64,
    features: Vec<FeatureEstimate>,
}

impl EstimateSet {
    /// Empty set for `d` features; every interval uses `Z(delta / d)`.
    pub fn new(d: usize, delta: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::argument("estimate set needs at least one feature"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::argument(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(Self::with_z(d, z_critical(delta / d as f64)?))
    }

    pub fn with_z(d: usize, z: f64) -> Self {
        Self { z, features: vec![FeatureEstimate::new(); d] }
    }

    pub fn from_features(z: f64, features: Vec<FeatureEstimate>) -> Self {
        Self { z, features }
    }

    pub fn z(&self) -> f64 {
        self.z
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn feature(&self, i: usize) -> &FeatureEstimate {
        &self.features[i]
    }

    pub fn features(&self) -> &[FeatureEstimate] {
        &self.features
    }

    pub fn add_replicate(&mut self, i: usize, value: f64) -> Result<()> {
        if i >= self.features.len() {
            return Err(Error::argument(format!("feature {i} out of range")));
        }
        if !value.is_finite() {
            return Err(Error::EstimatorFailure { feature: i, value });
        }
        self.features[i].push(value, self.z);
        Ok(())
    }

    pub fn means(&self) -> Vec<f64> {
        self.features.iter().map(FeatureEstimate::mean).collect()
    }

    pub fn counts(&self) -> Vec<usize> {
        self.features.iter().map(FeatureEstimate::count).collect()
    }

    pub fn summaries(&self) -> Vec<FeatureSummary> {
        self.features.iter().map(FeatureEstimate::summary).collect()
    }
}
