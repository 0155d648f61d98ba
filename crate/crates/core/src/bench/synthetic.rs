//! Desk-scale synthetic instances with known Shapley values.
//!
//! Every generated model is a polynomial in `z - baseline` made of one main
//! effect per feature plus pairwise interactions. Interactions give the
//! per-replicate estimates real variance while the exact values stay
//! available in closed form.

use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Activation, DenseLayer, ExplanationInstance, ModelSpec, OutputScale, Term};
use crate::rng::mix_seed;

pub const MAX_SYNTHETIC_FEATURES: usize = 64;

/// Largest interaction coefficient magnitude.
const INTERACTION_SCALE: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GapProfile {
    /// All values distinct; the k-th and (k+1)-th differ by at least 0.1.
    Separated,
    /// Up to four values straddling the k boundary within 0.01 of each other.
    Clustered,
    /// The k-th and (k+1)-th values are exactly equal.
    Adversarial,
}

impl GapProfile {
    fn salt(self) -> u64 {
        match self {
            GapProfile::Separated => 1,
            GapProfile::Clustered => 2,
            GapProfile::Adversarial => 3,
        }
    }
}

pub struct SyntheticInstance {
    pub instance: ExplanationInstance,
    /// Closed-form Shapley values of `instance`.
    pub phi: Vec<f64>,
}

pub fn gen_synthetic(d: usize, k: usize, profile: GapProfile, seed: u64) -> Result<SyntheticInstance> {
    if !(2..=MAX_SYNTHETIC_FEATURES).contains(&d) {
        return Err(Error::argument(format!(
            "synthetic instances need 2 <= d <= {MAX_SYNTHETIC_FEATURES}, got {d}"
        )));
    }
    if k == 0 || k >= d {
        return Err(Error::argument(format!("k = {k} must satisfy 1 <= k < d = {d}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, profile.salt()));
    let targets = target_values(d, k, profile, &mut rng);

    // rank r is held by feature by_rank[r]
    let mut by_rank: Vec<usize> = (0..d).collect();
    by_rank.shuffle(&mut rng);

    let mut baseline: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let mut offset: Vec<f64> = (0..d)
        .map(|_| {
            let m = rng.random_range(0.5..1.5);
            if rng.random_bool(0.5) { m } else { -m }
        })
        .collect();

    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    let tie = (profile == GapProfile::Adversarial).then(|| (by_rank[k - 1], by_rank[k]));
    if let Some((p, q)) = tie {
        // Mirror images: same offset, same baseline, one shared interaction.
        baseline[q] = baseline[p];
        offset[q] = offset[p];
        pairs.push((p.min(q), p.max(q), INTERACTION_SCALE));
    }
    let tied = |j: usize| tie.is_some_and(|(p, q)| j == p || j == q);
    for j in (0..d).filter(|&j| !tied(j)) {
        let candidates: Vec<usize> = (0..d).filter(|&o| o != j && !tied(o)).collect();
        let Some(&partner) = candidates.choose(&mut rng) else { continue };
        let key = (j.min(partner), j.max(partner));
        if pairs.iter().any(|&(a, b, _)| (a, b) == key) {
            continue;
        }
        pairs.push((key.0, key.1, rng.random_range(-INTERACTION_SCALE..INTERACTION_SCALE)));
    }

    let mut target = vec![0.0; d];
    for (r, &j) in by_rank.iter().enumerate() {
        target[j] = targets[r];
    }
    let mut interaction_share = vec![0.0; d];
    for &(a, b, c) in &pairs {
        let half = c * offset[a] * offset[b] / 2.0;
        interaction_share[a] += half;
        interaction_share[b] += half;
    }
    let mut terms: Vec<Term> = (0..d)
        .map(|j| Term {
            coef: (target[j] - interaction_share[j]) / offset[j],
            features: vec![j],
        })
        .collect();
    if let Some((p, q)) = tie {
        terms[q].coef = terms[p].coef;
    }
    terms.extend(pairs.iter().map(|&(a, b, c)| Term { coef: c, features: vec![a, b] }));

    let x: Vec<f64> = baseline.iter().zip(&offset).map(|(b, u)| b + u).collect();
    let model = ModelSpec::synthetic(d, Some(baseline.clone()), terms, OutputScale::Logit)?;
    let instance = ExplanationInstance::new(Arc::new(model), x, baseline)?;
    let phi = instance.analytic_shap().expect("baseline equals the polynomial center");
    Ok(SyntheticInstance { instance, phi })
}

/// Target values by rank, largest first.
fn target_values(d: usize, k: usize, profile: GapProfile, rng: &mut impl Rng) -> Vec<f64> {
    let below = |r: usize, from: usize, top: f64| {
        let span = (d - from).max(2) - 1;
        top - 0.4 * (r - from) as f64 / span as f64
    };
    match profile {
        GapProfile::Separated => (0..d)
            .map(|r| {
                if r < k {
                    0.45 + 0.05 * (k - 1 - r) as f64 + rng.random_range(0.0..0.01)
                } else {
                    below(r, k, 0.3) + rng.random_range(0.0..0.005)
                }
            })
            .collect(),
        GapProfile::Clustered => {
            let lo = k.saturating_sub(2);
            let hi = (k + 2).min(d);
            (0..d)
                .map(|r| {
                    if r < lo {
                        0.5 + 0.05 * (lo - 1 - r) as f64
                    } else if r < hi {
                        0.3 - 0.003 * (r - lo) as f64
                    } else {
                        below(r, hi, 0.2)
                    }
                })
                .collect()
        }
        GapProfile::Adversarial => (0..d)
            .map(|r| {
                if r + 1 < k {
                    0.45 + 0.05 * (k - 2 - r) as f64
                } else if r <= k {
                    0.375
                } else {
                    below(r, k + 1, 0.3)
                }
            })
            .collect(),
    }
}

/// Random fully connected network with `hidden.len()` hidden layers and a
/// scalar head; weights are Glorot-uniform.
pub fn random_mlp(d: usize, hidden: &[usize], activation: Activation, output: OutputScale, seed: u64) -> Result<ModelSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6d6c70));
    let mut layers = Vec::with_capacity(hidden.len() + 1);
    let mut fan_in = d;
    for (idx, &width) in hidden.iter().chain(std::iter::once(&1)).enumerate() {
        let limit = (6.0 / (fan_in + width) as f64).sqrt();
        let weights = (0..width)
            .map(|_| (0..fan_in).map(|_| rng.random_range(-limit..limit)).collect())
            .collect();
        let bias = (0..width).map(|_| rng.random_range(-0.1..0.1)).collect();
        let act = if idx == hidden.len() { Activation::None } else { activation };
        layers.push(DenseLayer::new(weights, bias, act));
        fan_in = width;
    }
    ModelSpec::mlp(d, layers, output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{exact_shap, exact_topk, rank_descending};

    #[test]
    fn separated_margin() {
        let s = gen_synthetic(6, 2, GapProfile::Separated, 1).unwrap();
        let es = exact_shap(&s.instance).unwrap();
        let order = rank_descending(&es.phi);
        assert!(es.phi[order[1]] - es.phi[order[2]] >= 0.1);
        for (a, b) in es.phi.iter().zip(&s.phi) {
            assert!((a - b).abs() < 1e-12);
        }
        let mut sorted = s.phi.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(sorted.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn adversarial_tie_is_exact() {
        for seed in 0..5 {
            let s = gen_synthetic(8, 3, GapProfile::Adversarial, seed).unwrap();
            let order = rank_descending(&s.phi);
            assert_eq!(s.phi[order[2]], s.phi[order[3]]);
            let es = exact_shap(&s.instance).unwrap();
            let top = exact_topk(&es, 3, 0.0).unwrap();
            assert!((top.kth_value - s.phi[order[2]]).abs() < 1e-12);
        }
    }

    #[test]
    fn clustered_boundary_is_tight() {
        let s = gen_synthetic(10, 4, GapProfile::Clustered, 3).unwrap();
        let es = exact_shap(&s.instance).unwrap();
        let order = rank_descending(&es.phi);
        let cluster: Vec<f64> = order[2..6].iter().map(|&i| es.phi[i]).collect();
        let spread = cluster.iter().cloned().fold(f64::MIN, f64::max) - cluster.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread <= 0.01, "{spread}");
    }

    #[test]
    fn deterministic_in_seed() {
        let a = gen_synthetic(12, 4, GapProfile::Separated, 9).unwrap();
        let b = gen_synthetic(12, 4, GapProfile::Separated, 9).unwrap();
        let c = gen_synthetic(12, 4, GapProfile::Separated, 10).unwrap();
        assert_eq!(a.phi, b.phi);
        assert_eq!(a.instance.model(), b.instance.model());
        assert_ne!(a.phi, c.phi);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(gen_synthetic(65, 4, GapProfile::Separated, 0).is_err());
        assert!(gen_synthetic(4, 4, GapProfile::Separated, 0).is_err());
        assert!(gen_synthetic(1, 0, GapProfile::Separated, 0).is_err());
    }

    #[test]
    fn random_mlp_shapes() {
        let m = random_mlp(7, &[16, 8], Activation::Relu, OutputScale::Prob, 1).unwrap();
        assert_eq!(m.layers().len(), 3);
        let y = m.evaluate(&[0.5; 7]).unwrap();
        assert!(y > 0.0 && y < 1.0);
    }
}
