use crate::estimators::EstimateSet;
use crate::oracle::rank_descending;

/// Current Top-k by mean, and the two features that decide the overlap test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HighLowSplit {
    /// `k` largest means, ascending index.
    pub high: Vec<usize>,
    /// The remaining `d - k` features, ascending index.
    pub low: Vec<usize>,
    /// Member of `high` with the lowest lower bound.
    pub h: usize,
    /// Member of `low` with the highest upper bound.
    pub l: usize,
}

impl HighLowSplit {
    /// Ties on means, lower bounds and upper bounds go to the lower index.
    pub fn compute(es: &EstimateSet, k: usize) -> Self {
        let d = es.len();
        assert!(k >= 1 && k < d, "k = {k} must satisfy 1 <= k < d = {d}");
        let order = rank_descending(&es.means());
        let mut high = order[..k].to_vec();
        let mut low = order[k..].to_vec();
        high.sort_unstable();
        low.sort_unstable();
        let h = high
            .iter()
            .copied()
            .reduce(|best, i| if es.feature(i).lower() < es.feature(best).lower() { i } else { best })
            .expect("high is non-empty");
        let l = low
            .iter()
            .copied()
            .reduce(|best, i| if es.feature(i).upper() > es.feature(best).upper() { i } else { best })
            .expect("low is non-empty");
        Self { high, low, h, l }
    }

    /// `beta_l - alpha_h`.
    pub fn overlap(&self, es: &EstimateSet) -> f64 {
        es.feature(self.l).upper() - es.feature(self.h).lower()
    }
}

/// Every interval is at most `eps` wide (inclusive).
pub fn naive_stop_check(es: &EstimateSet, eps: f64) -> bool {
    es.features().iter().all(|f| f.width() <= eps)
}

/// `beta_l - alpha_h <= eps` (inclusive), with the split it was decided on.
pub fn overlap_stop_check(es: &EstimateSet, k: usize, eps: f64) -> (bool, HighLowSplit) {
    let split = HighLowSplit::compute(es, k);
    (split.overlap(es) <= eps, split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::FeatureEstimate;

    fn set(intervals: &[(f64, f64, f64)]) -> EstimateSet {
        EstimateSet::from_features(
            1.0,
            intervals
                .iter()
                .map(|&(mean, lo, hi)| FeatureEstimate::from_summary(10, mean, lo, hi))
                .collect(),
        )
    }

    fn widths(ws: &[f64]) -> EstimateSet {
        set(&ws.iter().map(|w| (0.0, -w / 2.0, w / 2.0)).collect::<Vec<_>>())
    }

    #[test]
    fn naive_examples() {
        assert!(naive_stop_check(&widths(&[0.0, 0.0, 0.0]), 1e-9));
        assert!(!naive_stop_check(&widths(&[0.004, 0.006]), 0.005));
        assert!(naive_stop_check(&widths(&[0.004, 0.005]), 0.005));
    }

    #[test]
    fn naive_rejects_unbounded_intervals() {
        let es = set(&[(0.0, f64::NEG_INFINITY, f64::INFINITY), (0.0, 0.0, 0.0)]);
        assert!(!naive_stop_check(&es, 1e6));
    }

    #[test]
    fn overlap_separated() {
        let es = set(&[(0.95, 0.9, 1.0), (0.25, 0.2, 0.3)]);
        let (stop, split) = overlap_stop_check(&es, 1, 0.05);
        assert!(stop);
        assert_eq!((split.h, split.l), (0, 1));
        assert!((split.overlap(&es) + 0.6).abs() < 1e-12);
    }

    #[test]
    fn overlap_entangled() {
        let es = set(&[(0.75, 0.5, 1.0), (0.675, 0.45, 0.9)]);
        let (stop, split) = overlap_stop_check(&es, 1, 0.1);
        assert!(!stop);
        assert!((split.overlap(&es) - 0.4).abs() < 1e-12);
    }

    #[test]
    fn overlap_with_eps_beyond_range() {
        let es = set(&[(0.5, 0.0, 1.0), (0.6, 0.1, 0.9), (0.2, 0.0, 0.4)]);
        assert!(overlap_stop_check(&es, 2, 2.0).0);
    }

    #[test]
    fn split_picks_boundary_features() {
        // means rank 2 > 0 > 3 > 1; k = 2
        let es = set(&[(0.6, 0.1, 1.1), (0.1, 0.05, 0.15), (0.9, 0.85, 0.95), (0.3, -0.2, 0.8)]);
        let split = HighLowSplit::compute(&es, 2);
        assert_eq!(split.high, vec![0, 2]);
        assert_eq!(split.low, vec![1, 3]);
        assert_eq!((split.h, split.l), (0, 3));
    }

    #[test]
    fn split_ties_go_to_lower_index() {
        let es = set(&[(0.5, 0.4, 0.6), (0.5, 0.4, 0.6), (0.5, 0.4, 0.6)]);
        let split = HighLowSplit::compute(&es, 1);
        assert_eq!(split.high, vec![0]);
        assert_eq!((split.h, split.l), (0, 1));
    }
}
