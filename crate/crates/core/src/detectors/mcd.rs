//! Minimum covariance determinant via FastMCD, scored with the Mahalanobis distance.
//!
//! Random `(p+1)`-subsets are grown into `h`-subsets, refined with two C-steps, and the
//! ten lowest-determinant candidates are iterated to convergence. The winning raw
//! covariance is rescaled for consistency with the normal model and then reweighted
//! using the points inside the 97.5 % chi-square contour.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

const N_BEST: usize = 10;
const MAX_C_STEPS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McdModel {
    pub(crate) location: Vec<f64>,
    /// Inverse of the robust covariance, row-major `p x p`.
    pub(crate) precision: Vec<f64>,
    pub(crate) dim: usize,
}

struct Estimate {
    location: DVector<f64>,
    cov: DMatrix<f64>,
    log_det: f64,
    support: Vec<usize>,
}

fn to_matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let p = rows[0].len();
    DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j])
}

fn mean_cov(x: &DMatrix<f64>, idx: &[usize], centered: bool) -> (DVector<f64>, DMatrix<f64>) {
    let p = x.ncols();
    let n = idx.len() as f64;
    let mut mean = DVector::zeros(p);
    if !centered {
        for &i in idx {
            mean += x.row(i).transpose();
        }
        mean /= n;
    }
    let mut cov = DMatrix::zeros(p, p);
    for &i in idx {
        let d = x.row(i).transpose() - &mean;
        cov += &d * d.transpose();
    }
    cov /= n;
    (mean, cov)
}

fn log_det(cov: &DMatrix<f64>) -> Option<f64> {
    let scale = cov.diagonal().iter().cloned().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let chol = cov.clone().cholesky()?;
    let ld: f64 = chol.l().diagonal().iter().map(|v| 2.0 * v.ln()).sum();
    // reject numerically singular matrices relative to their own scale
    let min_pivot = chol.l().diagonal().iter().cloned().fold(f64::INFINITY, f64::min);
    if min_pivot * min_pivot <= 1e-12 * scale {
        return None;
    }
    Some(ld)
}

fn sq_mahalanobis_all(x: &DMatrix<f64>, loc: &DVector<f64>, cov: &DMatrix<f64>) -> Option<Vec<f64>> {
    let chol = cov.clone().cholesky()?;
    Some(
        (0..x.nrows())
            .map(|i| {
                let d = x.row(i).transpose() - loc;
                let z = chol.l().solve_lower_triangular(&d).expect("cholesky factor is invertible");
                z.norm_squared()
            })
            .collect(),
    )
}

fn smallest(d: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

fn c_steps(x: &DMatrix<f64>, mut support: Vec<usize>, h: usize, steps: usize, centered: bool) -> Option<Estimate> {
    let (mut loc, mut cov) = mean_cov(x, &support, centered);
    let mut ld = log_det(&cov)?;
    for _ in 0..steps {
        let d = sq_mahalanobis_all(x, &loc, &cov)?;
        let next = smallest(&d, h);
        if next == support {
            break;
        }
        let (l2, c2) = mean_cov(x, &next, centered);
        let Some(ld2) = log_det(&c2) else { break };
        if ld2 > ld + 1e-12 * ld.abs().max(1.0) {
            break;
        }
        support = next;
        loc = l2;
        cov = c2;
        ld = ld2;
    }
    Some(Estimate {
        location: loc,
        cov,
        log_det: ld,
        support,
    })
}

impl McdModel {
    pub fn fit(train: &[Vec<f64>], assume_centered: bool, n_trials: usize, seed: u64) -> Result<Self> {
        let n = train.len();
        let p = train.first().map(Vec::len).unwrap_or(0);
        if n <= p + 1 {
            return Err(Error::InsufficientData(format!(
                "MCD needs more than {} rows for {p} features, got {n}",
                p + 1
            )));
        }
        let x = to_matrix(train);
        let all: Vec<usize> = (0..n).collect();
        let (_, full_cov) = mean_cov(&x, &all, assume_centered);
        if log_det(&full_cov).is_none() {
            return Err(Error::SingularCovariance(
                "training covariance is rank deficient (constant or collinear features)".into(),
            ));
        }
        let h = (n + p).div_ceil(2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut candidates: Vec<Estimate> = Vec::new();
        for _ in 0..n_trials.max(1) {
            let mut subset: Vec<usize> = sample(&mut rng, n, p + 1).into_vec();
            // grow degenerate starting subsets until their covariance is invertible
            loop {
                let (_, c) = mean_cov(&x, &subset, assume_centered);
                if log_det(&c).is_some() || subset.len() >= h {
                    break;
                }
                let extra = sample(&mut rng, n, n)
                    .into_iter()
                    .find(|i| !subset.contains(i))
                    .expect("subset smaller than n");
                subset.push(extra);
            }
            let (loc, cov) = mean_cov(&x, &subset, assume_centered);
            if log_det(&cov).is_none() {
                continue;
            }
            let Some(d) = sq_mahalanobis_all(&x, &loc, &cov) else { continue };
            if let Some(est) = c_steps(&x, smallest(&d, h), h, 2, assume_centered) {
                candidates.push(est);
            }
        }
        candidates.sort_by(|a, b| a.log_det.total_cmp(&b.log_det));
        candidates.truncate(N_BEST);
        let best = candidates
            .into_iter()
            .filter_map(|c| c_steps(&x, c.support, h, MAX_C_STEPS, assume_centered))
            .min_by(|a, b| a.log_det.total_cmp(&b.log_det))
            .ok_or_else(|| {
                Error::SingularCovariance("every h-subset has a singular covariance".into())
            })?;

        // consistency correction of the raw estimate
        let chi2 = ChiSquared::new(p as f64).expect("positive degrees of freedom");
        let d_raw = sq_mahalanobis_all(&x, &best.location, &best.cov)
            .ok_or_else(|| Error::SingularCovariance("raw MCD covariance".into()))?;
        let mut sorted = d_raw.clone();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        let correction = median / chi2.inverse_cdf(0.5);
        let cov_corrected = &best.cov * correction;

        // reweighting step
        let d_corr: Vec<f64> = d_raw.iter().map(|d| d / correction).collect();
        let cutoff = chi2.inverse_cdf(0.975);
        let inliers: Vec<usize> = (0..n).filter(|&i| d_corr[i] <= cutoff).collect();
        let (loc, cov) = if inliers.len() > p {
            let (l, c) = mean_cov(&x, &inliers, assume_centered);
            if log_det(&c).is_some() {
                (l, c)
            } else {
                (best.location.clone(), cov_corrected)
            }
        } else {
            (best.location.clone(), cov_corrected)
        };
        let precision = cov
            .clone()
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("reweighted covariance".into()))?
            .inverse();
        Ok(Self {
            location: loc.iter().copied().collect(),
            precision: precision.transpose().iter().copied().collect(),
            dim: p,
        })
    }

    /// Builds a model from a known location and covariance.
    pub fn from_moments(location: Vec<f64>, covariance: &[Vec<f64>]) -> Result<Self> {
        let p = location.len();
        let cov = DMatrix::from_fn(p, p, |i, j| covariance[i][j]);
        let precision = cov
            .cholesky()
            .ok_or_else(|| Error::SingularCovariance("supplied covariance".into()))?
            .inverse();
        Ok(Self {
            location,
            precision: precision.transpose().iter().copied().collect(),
            dim: p,
        })
    }

    pub fn location(&self) -> &[f64] {
        &self.location
    }

    /// `sqrt((x - loc)^T Cov^-1 (x - loc))`.
    pub fn score(&self, x: &[f64]) -> f64 {
        let p = self.dim;
        let d: Vec<f64> = x.iter().zip(&self.location).map(|(a, b)| a - b).collect();
        let mut q = 0.0;
        for i in 0..p {
            let row = &self.precision[i * p..(i + 1) * p];
            q += d[i] * row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        }
        q.max(0.0).sqrt()
    }
}
