//! Per-sample feature importance: permutation-sampled Shapley values for any detector
//! and Local-DIFFI for isolation forests, plus the Kendall-Tau distance between rankings.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{Algorithm, FittedDetector};
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExplainMethod {
    Shapley,
    LocalDiffi,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub feature: String,
    pub weight: f64,
}

/// Features ordered by importance, heaviest first. Equal weights keep declaration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRanking {
    pub entries: Vec<RankEntry>,
    pub method: ExplainMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ref: Option<String>,
    /// `|sum(phi) - (score(x) - baseline)|`, Shapley only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub additivity_residual: Option<f64>,
    /// True when every weight is zero and the order carries no information.
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl ImportanceRanking {
    /// Sorts `weights` (aligned with `names`) into a ranking.
    pub fn from_weights(names: &[String], weights: &[f64], method: ExplainMethod) -> Self {
        let mut order: Vec<usize> = (0..names.len()).collect();
        order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
        Self {
            entries: order
                .into_iter()
                .map(|i| RankEntry {
                    feature: names[i].clone(),
                    weight: weights[i],
                })
                .collect(),
            method,
            sample_ref: None,
            additivity_residual: None,
            degenerate: weights.iter().all(|w| *w == 0.0),
            notes: Vec::new(),
            elapsed_ms: None,
        }
    }

    pub fn features(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.feature.as_str()).collect()
    }

    pub fn top(&self) -> Option<&str> {
        self.entries.first().map(|e| e.feature.as_str())
    }

    pub fn weight(&self, feature: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.feature == feature).map(|e| e.weight)
    }

    /// Zero-based rank of a feature.
    pub fn position(&self, feature: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.feature == feature)
    }

    pub fn with_sample_ref(mut self, r: impl Into<String>) -> Self {
        self.sample_ref = Some(r.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Background {
    /// Up to `rows` training rows drawn without replacement.
    TrainingSample { rows: usize },
    /// The column means of the training rows.
    TrainingMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapleyConfig {
    pub n_permutations: usize,
    pub background: Background,
    pub seed: u64,
}

impl Default for ShapleyConfig {
    fn default() -> Self {
        Self {
            n_permutations: 128,
            background: Background::TrainingSample { rows: 50 },
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShapleyValues {
    pub phi: Vec<f64>,
    /// Mean score over the background rows.
    pub baseline: f64,
    pub value: f64,
    pub residual: f64,
    /// True when every permutation was enumerated.
    pub exact: bool,
}

fn factorial_capped(d: usize, cap: usize) -> usize {
    let mut f: usize = 1;
    for i in 2..=d {
        f = f.saturating_mul(i);
        if f > cap {
            return usize::MAX;
        }
    }
    f
}

fn all_permutations(d: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(d), &mut vec![false; d], &mut out);
    out
}

/// Shapley values of `f` at `x` for the game in which absent features take their values
/// from each background row in turn.
///
/// Permutations are drawn in antithetic pairs (an ordering and its reverse). When
/// `n_permutations` reaches `d!` every ordering is enumerated and the result is exact.
pub fn shapley_values<F>(f: F, x: &[f64], background: &[Vec<f64>], n_permutations: usize, seed: u64) -> Result<ShapleyValues>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
{
    if n_permutations < 1 {
        return Err(Error::InvalidConfig("n_permutations must be at least 1".into()));
    }
    if background.is_empty() {
        return Err(Error::InsufficientData("Shapley background is empty".into()));
    }
    let d = x.len();
    let exact = factorial_capped(d, n_permutations) <= n_permutations;
    let perms = if exact {
        all_permutations(d)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perms = Vec::with_capacity(n_permutations);
        while perms.len() < n_permutations {
            let mut p: Vec<usize> = (0..d).collect();
            p.shuffle(&mut rng);
            if perms.len() + 1 < n_permutations {
                let mut r = p.clone();
                r.reverse();
                perms.push(p);
                perms.push(r);
            } else {
                perms.push(p);
            }
        }
        perms
    };

    let contributions: Vec<Vec<f64>> = perms
        .par_iter()
        .map(|perm| -> Result<Vec<f64>> {
            let mut phi = vec![0.0; d];
            for b in background {
                let mut z = b.clone();
                let mut prev = f(&z)?;
                for &j in perm {
                    z[j] = x[j];
                    let cur = f(&z)?;
                    phi[j] += cur - prev;
                    prev = cur;
                }
            }
            Ok(phi)
        })
        .collect::<Result<_>>()?;
    let scale = (perms.len() * background.len()) as f64;
    let mut phi = vec![0.0; d];
    for c in &contributions {
        for (p, v) in phi.iter_mut().zip(c) {
            *p += v;
        }
    }
    phi.iter_mut().for_each(|p| *p /= scale);

    let baseline = background.iter().map(|b| f(b)).sum::<Result<f64>>()? / background.len() as f64;
    let value = f(x)?;
    let residual = (phi.iter().sum::<f64>() - (value - baseline)).abs();
    Ok(ShapleyValues {
        phi,
        baseline,
        value,
        residual,
        exact,
    })
}

/// Background rows for a fitted detector, in original feature units.
pub fn background_rows(f: &FittedDetector, background: &Background, seed: u64) -> Vec<Vec<f64>> {
    let rows = f.train_rows();
    match *background {
        Background::TrainingMeans => {
            let p = f.n_features();
            let mut m = vec![0.0; p];
            for r in rows {
                for (a, v) in m.iter_mut().zip(r) {
                    *a += v;
                }
            }
            m.iter_mut().for_each(|a| *a /= rows.len() as f64);
            vec![m]
        }
        Background::TrainingSample { rows: k } => {
            if rows.len() <= k {
                return rows.to_vec();
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut idx = sample(&mut rng, rows.len(), k.max(1)).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| rows[i].clone()).collect()
        }
    }
}

/// Ranks features by the absolute Shapley value of their contribution to the anomaly score.
pub fn shapley_importance(f: &FittedDetector, x: &FeatureVector, cfg: &ShapleyConfig) -> Result<ImportanceRanking> {
    if x.names != f.feature_names() {
        return Err(Error::FeatureMismatch("sample features differ from the detector's".into()));
    }
    let bg = background_rows(f, &cfg.background, cfg.seed);
    let sv = shapley_values(|z| f.score_values(z), &x.values, &bg, cfg.n_permutations, cfg.seed)?;
    let weights: Vec<f64> = sv.phi.iter().map(|p| p.abs()).collect();
    let mut r = ImportanceRanking::from_weights(&x.names, &weights, ExplainMethod::Shapley);
    r.additivity_residual = Some(sv.residual);
    Ok(r)
}

/// Raw Local-DIFFI importances in feature order.
pub fn local_diffi_weights(f: &FittedDetector, x: &[f64]) -> Result<Vec<f64>> {
    let forest = f.forest().ok_or_else(|| {
        Error::WrongAlgorithm(format!("Local-DIFFI needs an isolation forest, got {}", f.algorithm()))
    })?;
    let z = f.transform(x);
    let h_max = forest.max_depth() as f64;
    let p = x.len();
    let mut counts = vec![0.0; p];
    let mut importance = vec![0.0; p];
    for tree in forest.trees() {
        let path = tree.path(&z);
        if path.depth == 0 {
            continue;
        }
        let delta = 1.0 / path.depth as f64 - 1.0 / h_max;
        for &j in &path.features {
            counts[j] += 1.0;
            importance[j] += delta;
        }
    }
    Ok(importance
        .iter()
        .zip(&counts)
        .map(|(i, c)| if *c > 0.0 { i / c } else { 0.0 })
        .collect())
}

/// Depth-based importance of each feature for isolating `x` in an isolation forest.
pub fn local_diffi(f: &FittedDetector, x: &FeatureVector) -> Result<ImportanceRanking> {
    if f.algorithm() != Algorithm::If {
        return Err(Error::WrongAlgorithm(format!(
            "Local-DIFFI needs an isolation forest, got {}",
            f.algorithm()
        )));
    }
    if x.names != f.feature_names() {
        return Err(Error::FeatureMismatch("sample features differ from the detector's".into()));
    }
    let w = local_diffi_weights(f, &x.values)?;
    Ok(ImportanceRanking::from_weights(&x.names, &w, ExplainMethod::LocalDiffi))
}

/// Fraction of feature pairs ordered differently by the two rankings.
pub fn kendall_tau_distance(a: &ImportanceRanking, b: &ImportanceRanking) -> Result<f64> {
    let fa = a.features();
    let mut sa = fa.clone();
    let mut sb = b.features();
    sa.sort_unstable();
    sb.sort_unstable();
    if sa != sb || sa.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::IncomparableRankings(format!(
            "[{}] vs [{}]",
            fa.join(", "),
            b.features().join(", ")
        )));
    }
    let n = fa.len();
    if n < 2 {
        return Ok(0.0);
    }
    let pos_b: Vec<usize> = fa.iter().map(|f| b.position(f).expect("same set")).collect();
    let mut discordant = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if pos_b[i] > pos_b[j] {
                discordant += 1;
            }
        }
    }
    Ok(discordant as f64 / (n * (n - 1) / 2) as f64)
}
