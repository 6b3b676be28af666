//! Lightweight on-line detector of anomalies: an ensemble of one-dimensional histograms
//! over sparse random projections.
//!
//! Each projection has `ceil(sqrt(p))` standard-normal weights, the rest zero. The
//! projected training values are binned into `n_bins` equal-width bins and a bin's
//! probability is its share of the training rows. The score is the negated mean log
//! probability over all projections.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Probability assigned to empty bins and to values outside the training range.
pub const MIN_PROBABILITY: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub weights: Vec<f64>,
    pub lo: f64,
    pub width: f64,
    pub probs: Vec<f64>,
}

impl Projection {
    pub fn project(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum()
    }

    pub fn probability(&self, x: &[f64]) -> f64 {
        let z = self.project(x);
        let n = self.probs.len();
        let hi = self.lo + self.width * n as f64;
        let p = if z < self.lo || z > hi {
            0.0
        } else if self.width == 0.0 {
            self.probs[0]
        } else {
            self.probs[(((z - self.lo) / self.width).floor() as usize).min(n - 1)]
        };
        p.max(MIN_PROBABILITY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LodaModel {
    pub(crate) projections: Vec<Projection>,
}

impl LodaModel {
    pub fn fit(train: &[Vec<f64>], n_bins: usize, n_projections: usize, seed: u64) -> Self {
        let p = train[0].len();
        let nnz = ((p as f64).sqrt().ceil() as usize).clamp(1, p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let projections = (0..n_projections)
            .map(|_| {
                let mut weights = vec![0.0; p];
                for j in sample(&mut rng, p, nnz) {
                    weights[j] = StandardNormal.sample(&mut rng);
                }
                let z: Vec<f64> = train
                    .iter()
                    .map(|r| weights.iter().zip(r).map(|(w, v)| w * v).sum())
                    .collect();
                let lo = z.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let width = (hi - lo) / n_bins as f64;
                let mut counts = vec![0usize; n_bins];
                for v in &z {
                    let b = if width > 0.0 {
                        (((v - lo) / width).floor() as usize).min(n_bins - 1)
                    } else {
                        0
                    };
                    counts[b] += 1;
                }
                Projection {
                    weights,
                    lo,
                    width,
                    probs: counts.iter().map(|&c| c as f64 / z.len() as f64).collect(),
                }
            })
            .collect();
        Self { projections }
    }

    pub fn from_projections(projections: Vec<Projection>) -> Self {
        Self { projections }
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let s: f64 = self.projections.iter().map(|pr| pr.probability(x).ln()).sum();
        -s / self.projections.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_projection(probs: Vec<f64>) -> Projection {
        Projection {
            weights: vec![1.0],
            lo: 0.0,
            width: 1.0,
            probs,
        }
    }

    #[test]
    fn certain_bin_scores_zero() {
        let m = LodaModel::from_projections(vec![identity_projection(vec![1.0, 0.0])]);
        assert_eq!(m.score(&[0.5]), 0.0);
    }

    #[test]
    fn mean_of_two_log_probabilities() {
        let m = LodaModel::from_projections(vec![
            identity_projection(vec![1.0]),
            identity_projection(vec![(-2.0f64).exp()]),
        ]);
        assert!((m.score(&[0.5]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn projections_are_sparse() {
        let train: Vec<Vec<f64>> = (0..30).map(|i| (0..5).map(|j| (i * j) as f64).collect()).collect();
        let m = LodaModel::fit(&train, 5, 20, 0);
        for pr in m.projections() {
            assert_eq!(pr.weights.iter().filter(|w| **w != 0.0).count(), 3);
            assert!((pr.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_range_is_floored() {
        let m = LodaModel::from_projections(vec![identity_projection(vec![1.0])]);
        assert!((m.score(&[7.0]) + MIN_PROBABILITY.ln()).abs() < 1e-12);
    }
}
