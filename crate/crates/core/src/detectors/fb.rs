//! Feature bagging with LOF base estimators.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lof::LofModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Combination {
    #[default]
    Average,
    Max,
}

impl Combination {
    pub fn combine(self, scores: &[f64]) -> f64 {
        match self {
            Combination::Average => scores.iter().sum::<f64>() / scores.len() as f64,
            Combination::Max => scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaggedLof {
    pub(crate) features: Vec<usize>,
    pub(crate) lof: LofModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBaggingModel {
    pub(crate) estimators: Vec<BaggedLof>,
    pub(crate) combination: Combination,
}

fn project(x: &[f64], features: &[usize]) -> Vec<f64> {
    features.iter().map(|&j| x[j]).collect()
}

/// Inclusive range of subset sizes: from half the features (rounded up) to
/// `max_features * p`.
pub fn subset_size_range(p: usize, min_fraction: f64, max_features: f64) -> (usize, usize) {
    let hi = ((max_features * p as f64).floor() as usize).clamp(1, p);
    let lo = ((min_fraction * p as f64).ceil() as usize).clamp(1, hi);
    (lo, hi)
}

impl FeatureBaggingModel {
    pub fn fit(
        train: &[Vec<f64>],
        n_estimators: usize,
        min_fraction: f64,
        max_features: f64,
        k: usize,
        combination: Combination,
        seed: u64,
    ) -> Self {
        let p = train[0].len();
        let (lo, hi) = subset_size_range(p, min_fraction, max_features);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let estimators = (0..n_estimators)
            .map(|_| {
                let size = rng.random_range(lo..=hi);
                let mut features = sample(&mut rng, p, size).into_vec();
                features.sort_unstable();
                let sub: Vec<Vec<f64>> = train.iter().map(|r| project(r, &features)).collect();
                BaggedLof {
                    lof: LofModel::fit(sub, k, 2.0),
                    features,
                }
            })
            .collect();
        Self {
            estimators,
            combination,
        }
    }

    pub fn estimator_scores(&self, x: &[f64], exclude: Option<usize>) -> Vec<f64> {
        self.estimators
            .iter()
            .map(|e| e.lof.score(&project(x, &e.features), exclude))
            .collect()
    }

    pub fn score(&self, x: &[f64], exclude: Option<usize>) -> f64 {
        self.combination.combine(&self.estimator_scores(x, exclude))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Vec<Vec<f64>> {
        (0..40)
            .map(|i| vec![(i % 7) as f64, (i / 7) as f64 * 1.3, ((i * 3) % 5) as f64])
            .collect()
    }

    #[test]
    fn combinations() {
        assert_eq!(Combination::Average.combine(&[1.0, 3.0]), 2.0);
        assert_eq!(Combination::Max.combine(&[1.0, 3.0]), 3.0);
    }

    #[test]
    fn single_full_estimator_is_plain_lof() {
        let train = grid();
        let fb = FeatureBaggingModel::fit(&train, 1, 1.0, 1.0, 5, Combination::Average, 3);
        assert_eq!(fb.estimators[0].features, vec![0, 1, 2]);
        let lof = LofModel::fit(train.clone(), 5, 2.0);
        for q in [[0.5, 0.5, 0.5], [10.0, 0.0, 1.0]] {
            assert_eq!(fb.score(&q, None), lof.score(&q, None));
        }
        // one feature: the size range collapses to all features even at the default fraction
        let one: Vec<Vec<f64>> = train.iter().map(|r| vec![r[0]]).collect();
        let fb = FeatureBaggingModel::fit(&one, 1, 0.5, 1.0, 5, Combination::Average, 3);
        let lof = LofModel::fit(one, 5, 2.0);
        assert_eq!(fb.score(&[2.5], None), lof.score(&[2.5], None));
    }

    #[test]
    fn subset_sizes() {
        assert_eq!(subset_size_range(5, 0.5, 1.0), (3, 5));
        assert_eq!(subset_size_range(1, 0.5, 1.0), (1, 1));
        assert_eq!(subset_size_range(4, 0.5, 0.25), (1, 1));
    }

    #[test]
    fn seeded_fit_is_reproducible() {
        let train = grid();
        let a = FeatureBaggingModel::fit(&train, 10, 0.5, 1.0, 5, Combination::Average, 9);
        let b = FeatureBaggingModel::fit(&train, 10, 0.5, 1.0, 5, Combination::Average, 9);
        assert_eq!(a, b);
    }
}
