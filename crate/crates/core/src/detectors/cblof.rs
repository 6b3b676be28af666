//! Cluster-based local outlier factor on top of k-means++.
//!
//! Clusters are sorted by size (descending). The boundary `b` is the first position
//! where the cumulative size reaches `alpha * N` or the size ratio to the next cluster
//! reaches `beta`; clusters up to and including `b` are large, the rest small.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::neighbors::{minkowski, sq_euclidean};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub centroid: Vec<f64>,
    pub size: usize,
    pub large: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CblofModel {
    pub(crate) clusters: Vec<Cluster>,
}

/// Returns `(centroids, labels)`; empty clusters are dropped.
pub(crate) fn kmeans(x: &[Vec<f64>], k: usize, max_iter: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let n = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // k-means++ seeding
    let mut centroids = vec![x[rng.random_range(0..n)].clone()];
    let mut d2: Vec<f64> = x.iter().map(|r| sq_euclidean(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            rng.random_range(0..n)
        } else {
            let mut t = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if t < *w {
                    pick = i;
                    break;
                }
                t -= w;
            }
            pick
        };
        centroids.push(x[next].clone());
        for (d, r) in d2.iter_mut().zip(x) {
            *d = d.min(sq_euclidean(r, centroids.last().expect("just pushed")));
        }
    }

    let nearest = |r: &[f64], cs: &[Vec<f64>]| -> usize {
        cs.iter()
            .enumerate()
            .map(|(j, c)| (sq_euclidean(r, c), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, j)| j)
            .expect("at least one centroid")
    };
    let p = x[0].len();
    let mut labels: Vec<usize> = x.iter().map(|r| nearest(r, &centroids)).collect();
    for _ in 0..max_iter {
        let mut sums = vec![vec![0.0; p]; centroids.len()];
        let mut counts = vec![0usize; centroids.len()];
        for (r, &l) in x.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for (j, c) in centroids.iter_mut().enumerate() {
            if counts[j] > 0 {
                *c = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let next: Vec<usize> = x.iter().map(|r| nearest(r, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }

    // drop empty clusters and relabel
    let mut counts = vec![0usize; centroids.len()];
    for &l in &labels {
        counts[l] += 1;
    }
    let mut remap = vec![usize::MAX; centroids.len()];
    let mut kept = Vec::new();
    for (j, c) in centroids.into_iter().enumerate() {
        if counts[j] > 0 {
            remap[j] = kept.len();
            kept.push(c);
        }
    }
    let labels = labels.into_iter().map(|l| remap[l]).collect();
    (kept, labels)
}

/// Marks which cluster sizes are large. `sizes` in any order; result aligned with it.
pub fn partition_large(sizes: &[usize], alpha: f64, beta: f64) -> Vec<bool> {
    let total: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| sizes[b].cmp(&sizes[a]).then(a.cmp(&b)));
    let mut boundary = order.len().saturating_sub(1);
    let mut cum = 0usize;
    for pos in 0..order.len() {
        cum += sizes[order[pos]];
        if cum as f64 >= alpha * total as f64 {
            boundary = pos;
            break;
        }
        if pos + 1 < order.len() {
            let next = sizes[order[pos + 1]];
            if next == 0 || sizes[order[pos]] as f64 / next as f64 >= beta {
                boundary = pos;
                break;
            }
        }
    }
    let mut large = vec![false; sizes.len()];
    for &j in &order[..=boundary] {
        large[j] = true;
    }
    large
}

impl CblofModel {
    pub fn fit(train: &[Vec<f64>], n_clusters: usize, alpha: f64, beta: f64, seed: u64) -> Result<(Self, Vec<f64>)> {
        if train.len() < n_clusters {
            return Err(Error::InsufficientData(format!(
                "CBLOF needs at least {n_clusters} rows, got {}",
                train.len()
            )));
        }
        let (centroids, labels) = kmeans(train, n_clusters, 300, seed);
        let mut sizes = vec![0usize; centroids.len()];
        for &l in &labels {
            sizes[l] += 1;
        }
        let large = partition_large(&sizes, alpha, beta);
        let model = Self {
            clusters: centroids
                .into_iter()
                .zip(sizes)
                .zip(large)
                .map(|((centroid, size), large)| Cluster {
                    centroid,
                    size,
                    large,
                })
                .collect(),
        };
        let scores = train
            .iter()
            .zip(&labels)
            .map(|(r, &l)| model.score_in(r, l))
            .collect();
        Ok((model, scores))
    }

    pub fn from_clusters(clusters: Vec<Cluster>) -> Self {
        Self { clusters }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    fn score_in(&self, x: &[f64], cluster: usize) -> f64 {
        let c = &self.clusters[cluster];
        let size = c.size as f64;
        if c.large {
            size * minkowski(x, &c.centroid, 2.0)
        } else {
            let nearest_large = self
                .clusters
                .iter()
                .filter(|c| c.large)
                .map(|c| minkowski(x, &c.centroid, 2.0))
                .fold(f64::INFINITY, f64::min);
            size * nearest_large
        }
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let nearest = self
            .clusters
            .iter()
            .enumerate()
            .map(|(j, c)| (sq_euclidean(x, &c.centroid), j))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, j)| j)
            .expect("model has clusters");
        self.score_in(x, nearest)
    }
}
