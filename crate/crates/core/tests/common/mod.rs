#![allow(dead_code)]

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shapk::bench::random_mlp;
use shapk::model::{Activation, DenseLayer, OutputScale, Term};
use shapk::{ExplanationInstance, ModelSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Linear,
    Mlp,
    Product,
}

pub struct Generated {
    pub instance: ExplanationInstance,
    pub kind: Kind,
    /// Features the model never reads.
    pub dummies: Vec<usize>,
    /// Linear models only: `w_i (x_i - b_i)`.
    pub linear_phi: Option<Vec<f64>>,
}

fn point(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()
}

/// Random instance of the given kind with roughly a quarter of the features
/// dummies (never all of them).
pub fn random_instance(kind: Kind, d: usize, seed: u64) -> Generated {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dummies: Vec<usize> = (0..d).filter(|_| rng.random_bool(0.25)).take(d - 1).collect();
    let live = |j: usize| !dummies.contains(&j);
    let x = point(&mut rng, d);
    let b = point(&mut rng, d);
    let (model, linear_phi) = match kind {
        Kind::Linear => {
            let w: Vec<f64> = (0..d).map(|j| if live(j) { rng.random_range(-3.0..3.0) } else { 0.0 }).collect();
            let phi = (0..d).map(|j| w[j] * (x[j] - b[j])).collect();
            (ModelSpec::linear(w, rng.random_range(-1.0..1.0)).unwrap(), Some(phi))
        }
        Kind::Mlp => {
            let act = if rng.random_bool(0.5) { Activation::Relu } else { Activation::Tanh };
            let out = if rng.random_bool(0.5) { OutputScale::Prob } else { OutputScale::Logit };
            let base = random_mlp(d, &[8, 6], act, out, seed).unwrap();
            let mut layers = base.layers().to_vec();
            let first = &layers[0];
            let weights: Vec<Vec<f64>> = first
                .weights()
                .iter()
                .map(|row| row.iter().enumerate().map(|(j, &w)| if live(j) { w } else { 0.0 }).collect())
                .collect();
            layers[0] = DenseLayer::new(weights, first.bias().to_vec(), first.activation());
            (ModelSpec::mlp(d, layers, out).unwrap(), None)
        }
        Kind::Product => {
            let live_idx: Vec<usize> = (0..d).filter(|&j| live(j)).collect();
            let mut terms = Vec::new();
            for _ in 0..(2 * d) {
                let order = rng.random_range(1..=3usize.min(live_idx.len()));
                let mut features: Vec<usize> = Vec::new();
                while features.len() < order {
                    let j = live_idx[rng.random_range(0..live_idx.len())];
                    if !features.contains(&j) {
                        features.push(j);
                    }
                }
                terms.push(Term { coef: rng.random_range(-1.0..1.0), features });
            }
            let center = point(&mut rng, d);
            (ModelSpec::synthetic(d, Some(center), terms, OutputScale::Logit).unwrap(), None)
        }
    };
    Generated {
        instance: ExplanationInstance::new(Arc::new(model), x, b).unwrap(),
        kind,
        dummies,
        linear_phi,
    }
}

pub fn kind_for(i: usize) -> Kind {
    [Kind::Linear, Kind::Mlp, Kind::Product][i % 3]
}

/// Fraction with a two-sided binomial slack, for rate assertions.
pub fn rate_bound(p: f64, n: usize) -> f64 {
    p + 3.0 * (p * (1.0 - p) / n as f64).sqrt()
}
