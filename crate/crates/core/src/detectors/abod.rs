//! Fast angle-based outlier detection over the k nearest neighbors.
//!
//! For every neighbor pair `(B, C)` of the query `A` the term
//! `<AB, AC> / (|AB|^2 |AC|^2)` is weighted by `1 / (|AB| |AC|)`; the angle-based outlier
//! factor is the weighted variance of those terms. Outliers see their neighbors under
//! small angles and so have a small factor, hence the score is the negated factor.

use serde::{Deserialize, Serialize};

use super::neighbors::k_nearest;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastAbodModel {
    pub(crate) train: Vec<Vec<f64>>,
    pub(crate) k: usize,
}

/// Weighted angle variance of `a` against the given neighbor points.
pub fn angle_variance(a: &[f64], neighbors: &[&[f64]]) -> Result<f64> {
    let diffs: Vec<(Vec<f64>, f64)> = neighbors
        .iter()
        .map(|b| {
            let d: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
            let n2 = d.iter().map(|v| v * v).sum::<f64>();
            (d, n2)
        })
        .collect();
    let mut terms: Vec<(f64, f64)> = Vec::new();
    for i in 0..diffs.len() {
        for j in i + 1..diffs.len() {
            let (ab, nab) = &diffs[i];
            let (ac, nac) = &diffs[j];
            if *nab == 0.0 || *nac == 0.0 {
                continue;
            }
            let dot: f64 = ab.iter().zip(ac).map(|(x, y)| x * y).sum();
            terms.push((dot / (nab * nac), 1.0 / (nab * nac).sqrt()));
        }
    }
    if terms.is_empty() {
        return Err(Error::DegenerateGeometry(
            "every neighbor pair coincides with the query point".into(),
        ));
    }
    if terms.len() == 1 {
        return Ok(0.0);
    }
    let sw: f64 = terms.iter().map(|t| t.1).sum();
    let mean = terms.iter().map(|(v, w)| w * v).sum::<f64>() / sw;
    Ok(terms.iter().map(|(v, w)| w * (v - mean).powi(2)).sum::<f64>() / sw)
}

impl FastAbodModel {
    pub fn new(train: Vec<Vec<f64>>, k: usize) -> Self {
        Self { train, k }
    }

    pub fn score(&self, x: &[f64], exclude: Option<usize>) -> Result<f64> {
        let nn = k_nearest(&self.train, x, self.k, 2.0, exclude);
        let pts: Vec<&[f64]> = nn.iter().map(|&(_, i)| self.train[i].as_slice()).collect();
        Ok(-angle_variance(x, &pts)?)
    }
}
