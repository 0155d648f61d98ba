use rand::seq::SliceRandom;
use rand::Rng;

use crate::model::ExplanationInstance;

/// One permutation-sampling draw of feature `i`'s Shapley value.
///
/// Shuffles the features, takes the set `S` preceding `i` and returns
/// `v(S ∪ {i}) - v(S)`. Costs exactly two model evaluations.
pub fn sampling_shap_replicate<R: Rng + ?Sized>(inst: &ExplanationInstance, i: usize, rng: &mut R) -> f64 {
    let d = inst.d();
    assert!(i < d, "feature {i} out of range for d = {d}");
    let (x, b) = (inst.x(), inst.baseline());
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(rng);
    let mut z = b.to_vec();
    for &j in order.iter().take_while(|&&j| j != i) {
        z[j] = x[j];
    }
    let without = inst.value_at(&z);
    z[i] = x[i];
    let with = inst.value_at(&z);
    with - without
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{ModelSpec, OutputScale, Term};
    use crate::rng::Streams;

    fn product() -> ExplanationInstance {
        let m = ModelSpec::synthetic(3, None, vec![Term { coef: 1.0, features: vec![0, 1] }], OutputScale::Logit)
            .unwrap();
        ExplanationInstance::new(Arc::new(m), vec![1.0; 3], vec![0.0; 3]).unwrap()
    }

    #[test]
    fn single_feature_is_exact() {
        let m = Arc::new(ModelSpec::linear(vec![2.5], 1.0).unwrap());
        let inst = ExplanationInstance::new(m, vec![2.0], vec![0.0]).unwrap();
        let streams = Streams::new(1);
        for j in 0..20 {
            assert_eq!(sampling_shap_replicate(&inst, 0, &mut streams.feature(0, j)), 5.0);
        }
        assert_eq!(inst.evals(), 40);
    }

    #[test]
    fn product_feature_takes_both_values() {
        let inst = product();
        let streams = Streams::new(3);
        let draws: Vec<f64> = (0..400)
            .map(|j| sampling_shap_replicate(&inst, 0, &mut streams.feature(0, j)))
            .collect();
        assert!(draws.iter().all(|&v| v == 0.0 || v == 1.0));
        let ones = draws.iter().filter(|&&v| v == 1.0).count();
        // Binomial(400, 1/2): 5 sigma is 50.
        assert!((150..=250).contains(&ones), "{ones}");
    }

    #[test]
    fn dummy_feature_always_zero() {
        let inst = product();
        let streams = Streams::new(9);
        assert!((0..100).all(|j| sampling_shap_replicate(&inst, 2, &mut streams.feature(2, j)) == 0.0));
    }
}
