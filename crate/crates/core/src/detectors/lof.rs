//! Local outlier factor.
//!
//! Reachability distance of `x` to neighbor `o` is `max(k-dist(o), d(x, o))`; the local
//! reachability density is the inverse of the mean reachability distance (plus `1e-10`
//! so exact duplicates keep a finite density). The score is the mean ratio of the
//! neighbors' densities to the query's own.

use serde::{Deserialize, Serialize};

use super::neighbors::k_nearest;

pub(crate) const LRD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LofModel {
    pub(crate) train: Vec<Vec<f64>>,
    pub(crate) k: usize,
    pub(crate) p: f64,
    /// Leave-one-out k-distance of every training row.
    pub(crate) k_dist: Vec<f64>,
    /// Local reachability density of every training row.
    pub(crate) lrd: Vec<f64>,
}

impl LofModel {
    /// Requires `train.len() > k`.
    pub fn fit(train: Vec<Vec<f64>>, k: usize, p: f64) -> Self {
        let neighbors: Vec<Vec<(f64, usize)>> = (0..train.len())
            .map(|i| k_nearest(&train, &train[i], k, p, Some(i)))
            .collect();
        let k_dist: Vec<f64> = neighbors.iter().map(|nn| nn[nn.len() - 1].0).collect();
        let lrd = neighbors
            .iter()
            .map(|nn| {
                let reach: f64 = nn.iter().map(|&(d, o)| d.max(k_dist[o])).sum();
                1.0 / (reach / nn.len() as f64 + LRD_EPS)
            })
            .collect();
        Self {
            train,
            k,
            p,
            k_dist,
            lrd,
        }
    }

    pub fn score(&self, x: &[f64], exclude: Option<usize>) -> f64 {
        let nn = k_nearest(&self.train, x, self.k, self.p, exclude);
        let m = nn.len() as f64;
        let reach: f64 = nn.iter().map(|&(d, o)| d.max(self.k_dist[o])).sum();
        let lrd_x = 1.0 / (reach / m + LRD_EPS);
        nn.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / m / lrd_x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Step-by-step LOF written directly from the definitions, with full sorts and no
    /// shared state.
    fn brute_lof(train: &[Vec<f64>], x: &[f64], k: usize) -> f64 {
        let dist = |a: &[f64], b: &[f64]| -> f64 {
            a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt()
        };
        let knn = |q: &[f64], skip: Option<usize>| -> Vec<usize> {
            let mut idx: Vec<usize> = (0..train.len()).filter(|i| Some(*i) != skip).collect();
            idx.sort_by(|&a, &b| {
                dist(&train[a], q).partial_cmp(&dist(&train[b], q)).unwrap().then(a.cmp(&b))
            });
            idx.truncate(k);
            idx
        };
        let kdist = |o: usize| -> f64 {
            let nn = knn(&train[o], Some(o));
            dist(&train[o], &train[*nn.last().unwrap()])
        };
        let lrd_train = |o: usize| -> f64 {
            let nn = knn(&train[o], Some(o));
            let s: f64 = nn.iter().map(|&q| dist(&train[o], &train[q]).max(kdist(q))).sum();
            1.0 / (s / k as f64 + 1e-10)
        };
        let nn = knn(x, None);
        let s: f64 = nn.iter().map(|&q| dist(x, &train[q]).max(kdist(q))).sum();
        let lrd_x = 1.0 / (s / k as f64 + 1e-10);
        nn.iter().map(|&q| lrd_train(q) / lrd_x).sum::<f64>() / k as f64
    }

    #[test]
    fn grid_interior_is_about_one() {
        let train: Vec<Vec<f64>> = (0..10)
            .flat_map(|i| (0..10).map(move |j| vec![i as f64, j as f64]))
            .collect();
        let m = LofModel::fit(train, 4, 2.0);
        let s = m.score(&[4.0, 5.0], None);
        assert!((s - 1.0).abs() <= 0.1, "{s}");
    }

    #[test]
    fn six_point_hand_instance() {
        let train = vec![
            vec![0.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            vec![5.0, 5.0],
        ];
        let m = LofModel::fit(train.clone(), 2, 2.0);
        for q in [[5.0, 5.0], [0.2, 0.1], [3.0, 2.0], [0.5, 0.5]] {
            let got = m.score(&q, None);
            let want = brute_lof(&train, &q, 2);
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "{q:?}: {got} vs {want}");
        }
        // the isolated point, queried leave-one-out, stands out
        assert!(m.score(&train[5], Some(5)) > 3.0);
    }

    #[test]
    fn duplicated_point_scores_one() {
        let train = vec![vec![0.0], vec![0.0], vec![5.0], vec![6.0]];
        let m = LofModel::fit(train, 1, 2.0);
        assert!((m.score(&[0.0], None) - 1.0).abs() < 1e-9);
    }
}
