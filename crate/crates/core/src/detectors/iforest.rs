//! Isolation forest.
//!
//! Each tree is grown on a subsample of `psi = min(max_samples, n)` rows down to depth
//! `ceil(log2(psi))`. A split picks a random feature among those that still vary in the
//! node and a uniform threshold inside the node's range. The path length of a point is
//! the depth of the leaf it lands in plus `c(size)`, the expected depth of an unsuccessful
//! BST search over the rows left in that leaf. The score is `2^(-E[h] / c(psi))`.

use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Harmonic number `H(n)`; exact summation for small `n`.
fn harmonic(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    if n <= 256 {
        let table = TABLE.get_or_init(|| {
            let mut h = vec![0.0; 257];
            for i in 1..=256 {
                h[i] = h[i - 1] + 1.0 / i as f64;
            }
            h
        });
        table[n]
    } else {
        let n = n as f64;
        n.ln() + EULER_GAMMA + 1.0 / (2.0 * n) - 1.0 / (12.0 * n * n)
    }
}

/// Average path length of an unsuccessful search in a BST of `n` nodes.
pub fn average_path_length(n: usize) -> f64 {
    match n {
        0 | 1 => 0.0,
        _ => 2.0 * harmonic(n - 1) - 2.0 * (n as f64 - 1.0) / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        size: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITree {
    pub(crate) nodes: Vec<Node>,
}

/// The route of one point through a tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreePath {
    /// Features tested at each internal node on the way down.
    pub features: Vec<usize>,
    /// Number of edges from the root to the leaf.
    pub depth: usize,
    pub leaf_size: usize,
}

impl ITree {
    fn grow(data: &[Vec<f64>], rows: Vec<usize>, height_limit: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut tree = ITree { nodes: Vec::new() };
        tree.build(data, rows, 0, height_limit, rng);
        tree
    }

    fn build(&mut self, data: &[Vec<f64>], rows: Vec<usize>, depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { size: rows.len() });
        if depth >= limit || rows.len() <= 1 {
            return id;
        }
        let p = data[rows[0]].len();
        let ranges: Vec<(usize, f64, f64)> = (0..p)
            .filter_map(|j| {
                let (lo, hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                    (lo.min(data[r][j]), hi.max(data[r][j]))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            return id;
        }
        let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
        let mut threshold = lo + rng.random::<f64>() * (hi - lo);
        if threshold <= lo {
            threshold = lo + f64::EPSILON * lo.abs().max(1.0);
        }
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| data[r][feature] < threshold);
        let left = self.build(data, l_rows, depth + 1, limit, rng);
        let right = self.build(data, r_rows, depth + 1, limit, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }

    /// Builds a tree from explicit nodes; node 0 is the root.
    pub fn from_nodes(nodes: Vec<Node>) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn path(&self, x: &[f64]) -> TreePath {
        let mut features = Vec::new();
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    features.push(*feature);
                    id = if x[*feature] < *threshold { *left } else { *right };
                }
                Node::Leaf { size } => {
                    return TreePath {
                        depth: features.len(),
                        features,
                        leaf_size: *size,
                    }
                }
            }
        }
    }

    pub fn path_length(&self, x: &[f64]) -> f64 {
        let mut id = 0;
        let mut depth = 0usize;
        loop {
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    depth += 1;
                    id = if x[*feature] < *threshold { *left } else { *right };
                }
                Node::Leaf { size } => return depth as f64 + average_path_length(*size),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationForest {
    pub(crate) trees: Vec<ITree>,
    /// Subsample size each tree was grown on.
    pub(crate) subsample: usize,
}

impl IsolationForest {
    pub fn fit(train: &[Vec<f64>], n_estimators: usize, max_samples: usize, seed: u64) -> Self {
        let n = train.len();
        let psi = max_samples.clamp(1, n.max(1));
        let height_limit = (psi as f64).log2().ceil() as usize;
        // one independent stream per tree so the forest does not depend on thread count
        let trees = (0..n_estimators)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(t as u64 + 1);
                let rows = sample(&mut rng, n, psi).into_vec();
                ITree::grow(train, rows, height_limit, &mut rng)
            })
            .collect();
        Self {
            trees,
            subsample: psi,
        }
    }

    pub fn from_trees(trees: Vec<ITree>, subsample: usize) -> Self {
        Self { trees, subsample }
    }

    pub fn trees(&self) -> &[ITree] {
        &self.trees
    }

    pub fn subsample(&self) -> usize {
        self.subsample
    }

    /// Depth cap used for the Local-DIFFI normalization: `ceil(log2(psi)) + 1`.
    pub fn max_depth(&self) -> usize {
        (self.subsample as f64).log2().ceil() as usize + 1
    }

    pub fn mean_path_length(&self, x: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.path_length(x)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let c = average_path_length(self.subsample);
        if c == 0.0 {
            return 1.0;
        }
        2f64.powf(-self.mean_path_length(x) / c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn path_length_adjustment() {
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(2), 1.0);
        // 2 H(255) - 2 * 255 / 256
        let h255: f64 = (1..=255).map(|i| 1.0 / i as f64).sum();
        assert!((average_path_length(256) - (2.0 * h255 - 2.0 * 255.0 / 256.0)).abs() < 1e-12);
        // the asymptotic branch agrees with exact summation
        let h999: f64 = (1..=999).map(|i| 1.0 / i as f64).sum();
        assert!((harmonic(999) - h999).abs() < 1e-9);
    }

    #[test]
    fn single_training_point_scores_one() {
        let f = IsolationForest::fit(&[vec![1.0, 2.0]], 10, 128, 0);
        assert_eq!(f.score(&[1.0, 2.0]), 1.0);
        assert_eq!(f.score(&[100.0, -2.0]), 1.0);
    }

    #[test]
    fn planted_outlier_has_top_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut train: Vec<Vec<f64>> = (0..128)
            .map(|_| vec![StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)])
            .collect();
        train.push(vec![8.0, 8.0]);
        let f = IsolationForest::fit(&train, 100, 128, 1);
        let out = f.score(&train[128]);
        assert!(out > 0.6);
        assert!(train[..128].iter().all(|r| f.score(r) < out));
    }

    #[test]
    fn scores_lie_in_unit_interval() {
        let train: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * 7 % 13) as f64]).collect();
        let f = IsolationForest::fit(&train, 20, 32, 3);
        for q in [[0.0, 0.0], [1e6, -1e6], [25.0, 6.0]] {
            let s = f.score(&q);
            assert!(s > 0.0 && s <= 1.0);
        }
    }

    #[test]
    fn constant_data_yields_single_leaf_trees() {
        let train = vec![vec![3.0, 3.0]; 40];
        let f = IsolationForest::fit(&train, 5, 32, 0);
        assert!(f.trees().iter().all(|t| t.nodes().len() == 1));
        assert!((f.score(&[3.0, 3.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn seeded_fit_is_bit_identical() {
        let train: Vec<Vec<f64>> = (0..60).map(|i| vec![(i as f64).sin(), (i as f64 * 0.3).cos()]).collect();
        let a = IsolationForest::fit(&train, 30, 32, 77);
        let b = IsolationForest::fit(&train, 30, 32, 77);
        assert_eq!(a, b);
        let c = IsolationForest::fit(&train, 30, 32, 78);
        assert_ne!(a, c);
    }
}
