mod common;

use std::sync::Arc;

use common::{kind_for, random_instance, Kind};
use proptest::prelude::*;
use shapk::estimators::kernel_shap_exhaustive;
use shapk::model::{DenseLayer, OutputScale};
use shapk::{exact_shap, ExplanationInstance, ModelSpec};

fn value_gap(inst: &ExplanationInstance) -> f64 {
    let (empty, full) = inst.anchor_values();
    full - empty
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn efficiency_holds(kind in 0usize..3, d in 1usize..=10, seed in any::<u64>()) {
        let g = random_instance(kind_for(kind), d, seed);
        let es = exact_shap(&g.instance).unwrap();
        let total: f64 = es.phi.iter().sum();
        prop_assert!((total - value_gap(&g.instance)).abs() < 1e-9);
        prop_assert!(es.efficiency_gap < 1e-9);
    }

    #[test]
    fn dummies_get_zero(kind in 0usize..3, d in 2usize..=10, seed in any::<u64>()) {
        let g = random_instance(kind_for(kind), d, seed);
        let es = exact_shap(&g.instance).unwrap();
        for &j in &g.dummies {
            prop_assert!(es.phi[j].abs() <= 1e-12, "phi[{}] = {}", j, es.phi[j]);
        }
    }

    #[test]
    fn relabelling_features_permutes_values(d in 2usize..=8, seed in any::<u64>(), shift in 1usize..8) {
        let g = random_instance(Kind::Mlp, d, seed);
        let perm: Vec<usize> = (0..d).map(|j| (j + shift) % d).collect();
        let layers = g.instance.model().layers();
        let first = &layers[0];
        // new feature j reads old feature perm[j]
        let weights = first
            .weights()
            .iter()
            .map(|row| perm.iter().map(|&p| row[p]).collect())
            .collect();
        let mut permuted_layers = layers.to_vec();
        permuted_layers[0] = DenseLayer::new(weights, first.bias().to_vec(), first.activation());
        let model = ModelSpec::mlp(d, permuted_layers, g.instance.model().output()).unwrap();
        let x = perm.iter().map(|&p| g.instance.x()[p]).collect();
        let b = perm.iter().map(|&p| g.instance.baseline()[p]).collect();
        let permuted = ExplanationInstance::new(Arc::new(model), x, b).unwrap();
        let a = exact_shap(&g.instance).unwrap();
        let c = exact_shap(&permuted).unwrap();
        for (j, &p) in perm.iter().enumerate() {
            prop_assert!((c.phi[j] - a.phi[p]).abs() < 1e-10);
        }
    }

    #[test]
    fn interchangeable_features_share_value(d in 2usize..=8, seed in any::<u64>(), pick in any::<(usize, usize)>()) {
        let g = random_instance(Kind::Mlp, d, seed);
        let (i, j) = (pick.0 % d, pick.1 % d);
        prop_assume!(i != j);
        let layers = g.instance.model().layers();
        let first = &layers[0];
        let weights = first
            .weights()
            .iter()
            .map(|row| {
                let mut row = row.clone();
                row[j] = row[i];
                row
            })
            .collect();
        let mut twin_layers = layers.to_vec();
        twin_layers[0] = DenseLayer::new(weights, first.bias().to_vec(), first.activation());
        let model = ModelSpec::mlp(d, twin_layers, OutputScale::Logit).unwrap();
        let mut x = g.instance.x().to_vec();
        let mut b = g.instance.baseline().to_vec();
        x[j] = x[i];
        b[j] = b[i];
        let inst = ExplanationInstance::new(Arc::new(model), x, b).unwrap();
        let es = exact_shap(&inst).unwrap();
        prop_assert!((es.phi[i] - es.phi[j]).abs() < 1e-12);
    }

    #[test]
    fn exhaustive_kernel_matches_enumeration(kind in 0usize..3, d in 2usize..=9, seed in any::<u64>()) {
        let g = random_instance(kind_for(kind), d, seed);
        let exact = exact_shap(&g.instance).unwrap();
        let kernel = kernel_shap_exhaustive(&g.instance).unwrap();
        for (a, b) in exact.phi.iter().zip(&kernel) {
            prop_assert!((a - b).abs() < 1e-8, "{} vs {}", a, b);
        }
    }
}

#[test]
fn linear_values_are_closed_form() {
    for seed in 0..50 {
        let g = random_instance(Kind::Linear, 1 + (seed as usize % 12), seed);
        let es = exact_shap(&g.instance).unwrap();
        let want = g.linear_phi.unwrap();
        for (a, b) in es.phi.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn enumeration_costs_two_to_the_d() {
    for d in [1, 5, 10] {
        let g = random_instance(Kind::Product, d, d as u64);
        let inst = g.instance.fork();
        exact_shap(&inst).unwrap();
        assert_eq!(inst.evals(), 1 << d);
    }
}
