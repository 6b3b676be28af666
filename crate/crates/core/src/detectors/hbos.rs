//! Histogram-based outlier score.
//!
//! One equal-width histogram per feature over the training range, heights scaled so the
//! tallest bin is 1. A value contributes `-ln(h + alpha)` where `h` is the height of its
//! bin. Values beyond the training range but within `tol` bin widths of an edge use the
//! edge bin; anything further out sees height 0.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: f64,
    pub width: f64,
    /// Normalized heights, tallest bin = 1.
    pub heights: Vec<f64>,
}

impl Histogram {
    pub fn fit(values: &[f64], n_bins: usize) -> Self {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / n_bins as f64;
        let mut counts = vec![0usize; n_bins];
        for &v in values {
            let b = if width > 0.0 {
                (((v - lo) / width).floor() as usize).min(n_bins - 1)
            } else {
                0
            };
            counts[b] += 1;
        }
        let top = counts.iter().copied().max().unwrap_or(1).max(1) as f64;
        Self {
            lo,
            width,
            heights: counts.iter().map(|&c| c as f64 / top).collect(),
        }
    }

    fn hi(&self) -> f64 {
        self.lo + self.width * self.heights.len() as f64
    }

    pub fn height(&self, v: f64, tol: f64) -> f64 {
        let n = self.heights.len();
        let slack = tol * self.width;
        let hi = self.hi();
        if v < self.lo {
            return if self.lo - v <= slack { self.heights[0] } else { 0.0 };
        }
        if v > hi {
            return if v - hi <= slack { self.heights[n - 1] } else { 0.0 };
        }
        if self.width == 0.0 {
            return self.heights[0];
        }
        self.heights[(((v - self.lo) / self.width).floor() as usize).min(n - 1)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HbosModel {
    pub(crate) histograms: Vec<Histogram>,
    pub(crate) alpha: f64,
    pub(crate) tol: f64,
}

impl HbosModel {
    pub fn fit(train: &[Vec<f64>], n_bins: usize, alpha: f64, tol: f64) -> Self {
        let p = train[0].len();
        let histograms = (0..p)
            .map(|j| {
                let col: Vec<f64> = train.iter().map(|r| r[j]).collect();
                Histogram::fit(&col, n_bins)
            })
            .collect();
        Self { histograms, alpha, tol }
    }

    pub fn from_histograms(histograms: Vec<Histogram>, alpha: f64, tol: f64) -> Self {
        Self { histograms, alpha, tol }
    }

    pub fn histograms(&self) -> &[Histogram] {
        &self.histograms
    }

    pub fn contributions(&self, x: &[f64]) -> Vec<f64> {
        self.histograms
            .iter()
            .zip(x)
            .map(|(h, &v)| -(h.height(v, self.tol) + self.alpha).ln())
            .collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        self.contributions(x).iter().sum()
    }
}
