use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::solve_spd;
use crate::error::{Error, Result};
use crate::model::ExplanationInstance;
use crate::oracle::{binomial, MAX_ORACLE_FEATURES};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelBatchConfig {
    /// Coalitions drawn per joint replicate (`M`).
    pub coalitions_per_replicate: usize,
    /// Pair every drawn coalition with its complement.
    #[serde(default)]
    pub include_paired: bool,
}

impl KernelBatchConfig {
    pub fn for_features(d: usize) -> Self {
        Self { coalitions_per_replicate: (2 * d).max(128), include_paired: false }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.coalitions_per_replicate < d + 2 {
            return Err(Error::config(format!(
                "kernel replicate needs at least d + 2 = {} coalitions, got {}",
                d + 2,
                self.coalitions_per_replicate
            )));
        }
        Ok(())
    }
}

/// Normal equations of the efficiency-constrained regression, with the last
/// coefficient eliminated as `phi_{d-1} = total - sum(phi_j, j < d-1)`.
struct ReducedNormalEquations {
    n: usize,
    ata: Vec<f64>,
    aty: Vec<f64>,
    empty: f64,
    total: f64,
}

impl ReducedNormalEquations {
    fn new(d: usize, empty: f64, total: f64) -> Self {
        let n = d - 1;
        Self { n, ata: vec![0.0; n * n], aty: vec![0.0; n], empty, total }
    }

    fn add_row(&mut self, present: &[bool], weight: f64, value: f64) {
        let n = self.n;
        let last = if present[n] { 1.0 } else { 0.0 };
        let target = value - self.empty - last * self.total;
        let row: Vec<f64> = (0..n).map(|j| if present[j] { 1.0 } else { 0.0 } - last).collect();
        for (a, &ra) in row.iter().enumerate() {
            if ra == 0.0 {
                continue;
            }
            self.aty[a] += weight * ra * target;
            for (b, &rb) in row.iter().enumerate().skip(a) {
                self.ata[a * n + b] += weight * ra * rb;
            }
        }
    }

    fn solve(mut self) -> Option<Vec<f64>> {
        let n = self.n;
        for a in 0..n {
            for b in 0..a {
                self.ata[a * n + b] = self.ata[b * n + a];
            }
        }
        // A column that never varies cannot be identified; jitter would only
        // hide it.
        if (0..n).any(|a| self.ata[a * n + a] == 0.0) {
            return None;
        }
        let mut phi = solve_spd(&self.ata, &self.aty, n)?;
        let rest: f64 = phi.iter().sum();
        phi.push(self.total - rest);
        Some(phi)
    }
}

/// One joint KernelSHAP estimate of all `d` Shapley values.
///
/// Draws `M` proper coalitions with `P(|S| = s) ∝ (d-1) / (s (d-s))` and a
/// uniform subset of that size, so the Shapley kernel is absorbed by the
/// sampling and the regression is unweighted. Costs `M` evaluations plus
/// two for `v(∅)` and `v(D)` the first time the instance needs them. A
/// singular design is redrawn once before giving up.
pub fn kernel_shap_replicate<R: Rng + ?Sized>(
    inst: &ExplanationInstance,
    cfg: &KernelBatchConfig,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let d = inst.d();
    cfg.validate(d)?;
    let (empty, full) = inst.anchor_values();
    if d == 1 {
        return Ok(vec![full - empty]);
    }
    let sizes = WeightedIndex::new((1..d).map(|s| 1.0 / (s * (d - s)) as f64)).expect("positive size weights");
    for _ in 0..2 {
        let mut eqs = ReducedNormalEquations::new(d, empty, full - empty);
        let mut drawn = 0;
        while drawn < cfg.coalitions_per_replicate {
            let size = sizes.sample(rng) + 1;
            let mut present = vec![false; d];
            for j in rand::seq::index::sample(rng, d, size) {
                present[j] = true;
            }
            eqs.add_row(&present, 1.0, coalition_value(inst, &present));
            drawn += 1;
            if cfg.include_paired && drawn < cfg.coalitions_per_replicate {
                present.iter_mut().for_each(|p| *p = !*p);
                eqs.add_row(&present, 1.0, coalition_value(inst, &present));
                drawn += 1;
            }
        }
        if let Some(phi) = eqs.solve() {
            return Ok(phi);
        }
    }
    Err(Error::DegenerateSample)
}

/// KernelSHAP over every proper coalition with exact Shapley-kernel
/// weights `(d-1) / (C(d,|S|) |S| (d-|S|))`; recovers the exact values.
pub fn kernel_shap_exhaustive(inst: &ExplanationInstance) -> Result<Vec<f64>> {
    let d = inst.d();
    if d > MAX_ORACLE_FEATURES {
        return Err(Error::OracleScale { d, max: MAX_ORACLE_FEATURES });
    }
    let (empty, full) = inst.anchor_values();
    if d == 1 {
        return Ok(vec![full - empty]);
    }
    let mut eqs = ReducedNormalEquations::new(d, empty, full - empty);
    let mut present = vec![false; d];
    for mask in 1..(1usize << d) - 1 {
        for (j, p) in present.iter_mut().enumerate() {
            *p = mask & (1 << j) != 0;
        }
        let s = mask.count_ones() as u64;
        let weight = (d as f64 - 1.0) / (binomial(d as u64, s) as f64 * (s * (d as u64 - s)) as f64);
        eqs.add_row(&present, weight, coalition_value(inst, &present));
    }
    eqs.solve().ok_or(Error::DegenerateSample)
}

fn coalition_value(inst: &ExplanationInstance, present: &[bool]) -> f64 {
    let z: Vec<f64> = present
        .iter()
        .zip(inst.x().iter().zip(inst.baseline()))
        .map(|(&p, (&x, &b))| if p { x } else { b })
        .collect();
    inst.value_at(&z)
}
