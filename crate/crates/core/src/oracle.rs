//! Brute-force interventional Shapley values and the exact Top-k set.
//!
//! Cost is `2^d` model evaluations, so enumeration is refused above
//! [`MAX_ORACLE_FEATURES`].

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::ExplanationInstance;

pub const MAX_ORACLE_FEATURES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactShap {
    pub phi: Vec<f64>,
    /// `|sum(phi) - (f(x) - f(baseline))|`.
    pub efficiency_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactTopK {
    /// The `k` largest values, ascending feature index.
    pub topk: Vec<usize>,
    pub kth_value: f64,
    /// Every feature allowed in an ε-approximate answer: `phi_i >= phi_k - eps`.
    pub eps_margin: Vec<usize>,
}

pub fn exact_shap(inst: &ExplanationInstance) -> Result<ExactShap> {
    let d = inst.d();
    if d > MAX_ORACLE_FEATURES {
        return Err(Error::OracleScale { d, max: MAX_ORACLE_FEATURES });
    }
    let n = 1usize << d;
    let (x, b) = (inst.x(), inst.baseline());
    let mut z = b.to_vec();
    let values: Vec<f64> = (0..n)
        .map(|mask| {
            for j in 0..d {
                z[j] = if mask & (1 << j) != 0 { x[j] } else { b[j] };
            }
            inst.value_at(&z)
        })
        .collect();

    // |S|!(d-|S|-1)!/d! = 1 / (d * C(d-1, |S|))
    let weights: Vec<f64> = (0..d)
        .map(|s| 1.0 / (d as f64 * binomial(d as u64 - 1, s as u64) as f64))
        .collect();

    let phi: Vec<f64> = (0..d)
        .map(|i| {
            let bit = 1usize << i;
            (0..n)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask]))
                .sum()
        })
        .collect();

    let total = values[n - 1] - values[0];
    let efficiency_gap = (phi.iter().sum::<f64>() - total).abs();
    Ok(ExactShap { phi, efficiency_gap })
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Indices ordered by value, largest first; equal values keep ascending index.
pub fn rank_descending(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

pub fn exact_topk(es: &ExactShap, k: usize, eps: f64) -> Result<ExactTopK> {
    let d = es.phi.len();
    if k == 0 || k > d {
        return Err(Error::argument(format!("k = {k} must be in 1..={d}")));
    }
    if !(eps >= 0.0) {
        return Err(Error::argument(format!("eps = {eps} must be non-negative")));
    }
    let order = rank_descending(&es.phi);
    let kth_value = es.phi[order[k - 1]];
    let mut topk = order[..k].to_vec();
    topk.sort_unstable();
    let eps_margin = (0..d).filter(|&i| es.phi[i] >= kth_value - eps).collect();
    Ok(ExactTopK { topk, kth_value, eps_margin })
}

/// Whether `candidate` is an ε-approximate Top-k answer.
pub fn is_eps_approximate(candidate: &[usize], es: &ExactShap, k: usize, eps: f64) -> Result<bool> {
    let d = es.phi.len();
    if candidate.len() != k {
        return Err(Error::argument(format!(
            "candidate has {} features, expected k = {k}",
            candidate.len()
        )));
    }
    let mut sorted = candidate.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != k || sorted.last().is_some_and(|&j| j >= d) {
        return Err(Error::argument("candidate must hold distinct features below d"));
    }
    let kth = exact_topk(es, k, eps)?.kth_value;
    Ok(candidate.iter().all(|&i| es.phi[i] >= kth - eps))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{ModelSpec, OutputScale, Term};

    fn shap_of(phi: Vec<f64>) -> ExactShap {
        ExactShap { phi, efficiency_gap: 0.0 }
    }

    fn product_instance() -> ExplanationInstance {
        let m = ModelSpec::synthetic(2, None, vec![Term { coef: 1.0, features: vec![0, 1] }], OutputScale::Logit)
            .unwrap();
        ExplanationInstance::new(Arc::new(m), vec![1.0, 1.0], vec![0.0, 0.0]).unwrap()
    }

    #[test]
    fn linear_closed_form() {
        let m = Arc::new(ModelSpec::linear(vec![1.0, 2.0, 3.0], 0.0).unwrap());
        let inst = ExplanationInstance::new(m, vec![1.0; 3], vec![0.0; 3]).unwrap();
        let es = exact_shap(&inst).unwrap();
        assert_eq!(es.phi, vec![1.0, 2.0, 3.0]);
        assert_eq!(inst.evals(), 8);
    }

    #[test]
    fn x_equal_to_baseline_gives_zero() {
        let m = Arc::new(ModelSpec::linear(vec![1.0, -2.0, 3.0], 4.0).unwrap());
        let inst = ExplanationInstance::new(m, vec![0.3; 3], vec![0.3; 3]).unwrap();
        assert_eq!(exact_shap(&inst).unwrap().phi, vec![0.0; 3]);
    }

    #[test]
    fn product_splits_evenly() {
        let es = exact_shap(&product_instance()).unwrap();
        assert_eq!(es.phi, vec![0.5, 0.5]);
        assert_eq!(es.efficiency_gap, 0.0);
    }

    #[test]
    fn refuses_large_d() {
        let m = Arc::new(ModelSpec::linear(vec![1.0; 21], 0.0).unwrap());
        let inst = ExplanationInstance::new(m, vec![1.0; 21], vec![0.0; 21]).unwrap();
        assert!(matches!(exact_shap(&inst), Err(Error::OracleScale { d: 21, max: 20 })));
        assert_eq!(inst.evals(), 0);
    }

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(19, 9), 92378);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 5), 1);
    }

    #[test]
    fn topk_examples() {
        let es = shap_of(vec![1.0, 2.0, 3.0]);
        let t = exact_topk(&es, 2, 0.0).unwrap();
        assert_eq!(t.topk, vec![1, 2]);
        assert_eq!(t.eps_margin, vec![1, 2]);
        assert_eq!(t.kth_value, 2.0);
        assert_eq!(exact_topk(&es, 2, 1.5).unwrap().eps_margin, vec![0, 1, 2]);

        let tied = exact_topk(&shap_of(vec![5.0, 5.0, 0.0]), 1, 0.0).unwrap();
        assert_eq!(tied.topk, vec![0]);
        assert_eq!(tied.eps_margin, vec![0, 1]);

        assert!(exact_topk(&es, 0, 0.0).is_err());
        assert!(exact_topk(&es, 4, 0.0).is_err());
    }

    #[test]
    fn eps_approximate_predicate() {
        let es = shap_of(vec![1.0, 2.0, 3.0]);
        assert!(is_eps_approximate(&[1, 2], &es, 2, 0.0).unwrap());
        assert!(!is_eps_approximate(&[0, 2], &es, 2, 0.5).unwrap());
        assert!(is_eps_approximate(&[0, 2], &es, 2, 1.5).unwrap());
        assert!(is_eps_approximate(&[0], &es, 2, 0.5).is_err());
        assert!(is_eps_approximate(&[2, 2], &es, 2, 0.5).is_err());
    }
}
