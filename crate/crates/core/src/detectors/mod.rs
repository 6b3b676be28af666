//! Anomaly detectors behind one fit/score contract. Larger scores are always more
//! anomalous.
//!
//! A [`DetectorConfig`] names the algorithm, its parameters and a seed. [`fit`] turns a
//! configuration and a training [`FeatureTable`] into an immutable [`FittedDetector`]
//! that remembers the scores of its own training rows; those drive [`ThresholdRule`]
//! thresholds and score normalization.

pub mod abod;
pub mod cblof;
pub mod fb;
pub mod hbos;
pub mod iforest;
pub mod knn;
pub mod loda;
pub mod lof;
pub mod mcd;
pub mod neighbors;
pub mod ocsvm;
pub mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureTable, FeatureVector, ScalingParams};

pub use abod::FastAbodModel;
pub use cblof::CblofModel;
pub use fb::{Combination, FeatureBaggingModel};
pub use hbos::HbosModel;
pub use iforest::IsolationForest;
pub use knn::{KnnMethod, KnnModel};
pub use loda::LodaModel;
pub use lof::LofModel;
pub use mcd::McdModel;
pub use ocsvm::{Kernel, OcsvmModel};
pub use window::{sliding_window_run, WindowOptions, WindowRun, WindowSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Knn,
    Mcd,
    Lof,
    Cblof,
    Ocsvm,
    Fb,
    FastAbod,
    If,
    Hbos,
    Loda,
    Ensemble,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::Knn,
        Algorithm::Mcd,
        Algorithm::Lof,
        Algorithm::Cblof,
        Algorithm::Ocsvm,
        Algorithm::Fb,
        Algorithm::FastAbod,
        Algorithm::If,
        Algorithm::Hbos,
        Algorithm::Loda,
        Algorithm::Ensemble,
    ];

    /// Every algorithm except the ensemble.
    pub const BASE: [Algorithm; 10] = [
        Algorithm::Knn,
        Algorithm::Mcd,
        Algorithm::Lof,
        Algorithm::Cblof,
        Algorithm::Ocsvm,
        Algorithm::Fb,
        Algorithm::FastAbod,
        Algorithm::If,
        Algorithm::Hbos,
        Algorithm::Loda,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn => "kNN",
            Algorithm::Mcd => "MCD",
            Algorithm::Lof => "LOF",
            Algorithm::Cblof => "CBLOF",
            Algorithm::Ocsvm => "OCSVM",
            Algorithm::Fb => "FB",
            Algorithm::FastAbod => "FastABOD",
            Algorithm::If => "IF",
            Algorithm::Hbos => "HBOS",
            Algorithm::Loda => "LODA",
            Algorithm::Ensemble => "Ensemble",
        }
    }

    /// Stable numeric id used in the binary model container.
    pub fn id(self) -> u8 {
        Self::ALL.iter().position(|a| *a == self).expect("listed") as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    /// Whether features are z-scored before fitting unless the config says otherwise.
    /// Histogram and tree detectors split per axis and are insensitive to scale.
    pub fn standardizes_by_default(self) -> bool {
        !matches!(self, Algorithm::If | Algorithm::Hbos | Algorithm::Ensemble)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let known: Vec<&str> = Self::ALL.iter().map(|a| a.name()).collect();
                Error::InvalidConfig(format!(
                    "field 'algorithm': unknown detector '{s}' (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

impl Serialize for Algorithm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Algorithm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnParams {
    #[serde(alias = "n_neighbors")]
    pub k: usize,
    pub method: KnnMethod,
    /// Minkowski exponent.
    pub p: f64,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self {
            k: 5,
            method: KnnMethod::Largest,
            p: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McdParams {
    pub assume_centered: bool,
    pub n_trials: usize,
}

impl Default for McdParams {
    fn default() -> Self {
        Self {
            assume_centered: false,
            n_trials: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LofParams {
    #[serde(alias = "n_neighbors")]
    pub k: usize,
    pub p: f64,
}

impl Default for LofParams {
    fn default() -> Self {
        Self { k: 16, p: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CblofParams {
    pub n_clusters: usize,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CblofParams {
    fn default() -> Self {
        Self {
            n_clusters: 6,
            alpha: 0.8,
            beta: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelName {
    Rbf,
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcsvmParams {
    pub kernel: KernelName,
    pub gamma: f64,
    pub nu: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for OcsvmParams {
    fn default() -> Self {
        Self {
            kernel: KernelName::Rbf,
            gamma: 0.2,
            nu: 0.7,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FbParams {
    pub n_estimators: usize,
    pub max_features: f64,
    /// Lower bound of the subset size as a fraction of the feature count.
    pub min_fraction: f64,
    /// Neighborhood size of the LOF base estimators.
    #[serde(alias = "n_neighbors")]
    pub k: usize,
    pub combination: Combination,
}

impl Default for FbParams {
    fn default() -> Self {
        Self {
            n_estimators: 10,
            max_features: 1.0,
            min_fraction: 0.5,
            k: 10,
            combination: Combination::Average,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FastAbodParams {
    #[serde(alias = "n_neighbors")]
    pub k: usize,
}

impl Default for FastAbodParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IfParams {
    pub n_estimators: usize,
    pub max_samples: usize,
}

impl Default for IfParams {
    fn default() -> Self {
        Self {
            n_estimators: 100,
            max_samples: 128,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HbosParams {
    pub n_bins: usize,
    pub alpha: f64,
    pub tol: f64,
}

impl Default for HbosParams {
    fn default() -> Self {
        Self {
            n_bins: 5,
            alpha: 0.1,
            tol: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LodaParams {
    pub n_bins: usize,
    pub n_random_cuts: usize,
}

impl Default for LodaParams {
    fn default() -> Self {
        Self {
            n_bins: 5,
            n_random_cuts: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleParams {
    /// Member algorithms, each fitted with its own default parameters.
    pub members: Vec<Algorithm>,
    /// How each member turns its scores into a vote.
    pub member_rule: ThresholdRule,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            members: Algorithm::BASE.to_vec(),
            member_rule: ThresholdRule::Contamination { ratio: 0.1 },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Params {
    Knn(KnnParams),
    Mcd(McdParams),
    Lof(LofParams),
    Cblof(CblofParams),
    Ocsvm(OcsvmParams),
    Fb(FbParams),
    FastAbod(FastAbodParams),
    If(IfParams),
    Hbos(HbosParams),
    Loda(LodaParams),
    Ensemble(EnsembleParams),
}

impl Params {
    pub fn default_for(algorithm: Algorithm) -> Self {
        match algorithm {
            Algorithm::Knn => Params::Knn(Default::default()),
            Algorithm::Mcd => Params::Mcd(Default::default()),
            Algorithm::Lof => Params::Lof(Default::default()),
            Algorithm::Cblof => Params::Cblof(Default::default()),
            Algorithm::Ocsvm => Params::Ocsvm(Default::default()),
            Algorithm::Fb => Params::Fb(Default::default()),
            Algorithm::FastAbod => Params::FastAbod(Default::default()),
            Algorithm::If => Params::If(Default::default()),
            Algorithm::Hbos => Params::Hbos(Default::default()),
            Algorithm::Loda => Params::Loda(Default::default()),
            Algorithm::Ensemble => Params::Ensemble(Default::default()),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Params::Knn(_) => Algorithm::Knn,
            Params::Mcd(_) => Algorithm::Mcd,
            Params::Lof(_) => Algorithm::Lof,
            Params::Cblof(_) => Algorithm::Cblof,
            Params::Ocsvm(_) => Algorithm::Ocsvm,
            Params::Fb(_) => Algorithm::Fb,
            Params::FastAbod(_) => Algorithm::FastAbod,
            Params::If(_) => Algorithm::If,
            Params::Hbos(_) => Algorithm::Hbos,
            Params::Loda(_) => Algorithm::Loda,
            Params::Ensemble(_) => Algorithm::Ensemble,
        }
    }

    fn from_value(algorithm: Algorithm, value: serde_json::Value) -> Result<Self> {
        let value = match value {
            serde_json::Value::Null => serde_json::Value::Object(Default::default()),
            v => v,
        };
        fn parse<T: serde::de::DeserializeOwned>(v: serde_json::Value, a: Algorithm) -> Result<T> {
            serde_json::from_value(v).map_err(|e| Error::InvalidConfig(format!("field 'params' for {a}: {e}")))
        }
        Ok(match algorithm {
            Algorithm::Knn => Params::Knn(parse(value, algorithm)?),
            Algorithm::Mcd => Params::Mcd(parse(value, algorithm)?),
            Algorithm::Lof => Params::Lof(parse(value, algorithm)?),
            Algorithm::Cblof => Params::Cblof(parse(value, algorithm)?),
            Algorithm::Ocsvm => Params::Ocsvm(parse(value, algorithm)?),
            Algorithm::Fb => Params::Fb(parse(value, algorithm)?),
            Algorithm::FastAbod => Params::FastAbod(parse(value, algorithm)?),
            Algorithm::If => Params::If(parse(value, algorithm)?),
            Algorithm::Hbos => Params::Hbos(parse(value, algorithm)?),
            Algorithm::Loda => Params::Loda(parse(value, algorithm)?),
            Algorithm::Ensemble => Params::Ensemble(parse(value, algorithm)?),
        })
    }

    fn to_value(&self) -> serde_json::Value {
        let v = match self {
            Params::Knn(p) => serde_json::to_value(p),
            Params::Mcd(p) => serde_json::to_value(p),
            Params::Lof(p) => serde_json::to_value(p),
            Params::Cblof(p) => serde_json::to_value(p),
            Params::Ocsvm(p) => serde_json::to_value(p),
            Params::Fb(p) => serde_json::to_value(p),
            Params::FastAbod(p) => serde_json::to_value(p),
            Params::If(p) => serde_json::to_value(p),
            Params::Hbos(p) => serde_json::to_value(p),
            Params::Loda(p) => serde_json::to_value(p),
            Params::Ensemble(p) => serde_json::to_value(p),
        };
        v.expect("parameter structs serialize")
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self {
            Params::Knn(p) if p.k == 0 => bad("kNN k must be at least 1".into()),
            Params::Knn(p) if !(p.p >= 1.0) => bad(format!("kNN Minkowski p must be >= 1, got {}", p.p)),
            Params::Lof(p) if p.k == 0 => bad("LOF k must be at least 1".into()),
            Params::Cblof(p) if p.n_clusters == 0 => bad("CBLOF n_clusters must be at least 1".into()),
            Params::Cblof(p) if !(p.alpha > 0.0 && p.alpha <= 1.0) || !(p.beta >= 1.0) => {
                bad(format!("CBLOF needs alpha in (0, 1] and beta >= 1, got {} and {}", p.alpha, p.beta))
            }
            Params::Ocsvm(p) if !(p.nu > 0.0 && p.nu <= 1.0) => bad(format!("OCSVM nu must lie in (0, 1], got {}", p.nu)),
            Params::Ocsvm(p) if !(p.gamma > 0.0) => bad(format!("OCSVM gamma must be positive, got {}", p.gamma)),
            Params::Fb(p) if p.n_estimators == 0 || p.k == 0 => bad("FB needs n_estimators >= 1 and k >= 1".into()),
            Params::Fb(p) if !(p.max_features > 0.0 && p.max_features <= 1.0) => {
                bad(format!("FB max_features must lie in (0, 1], got {}", p.max_features))
            }
            Params::FastAbod(p) if p.k < 2 => bad("FastABOD k must be at least 2".into()),
            Params::If(p) if p.n_estimators == 0 || p.max_samples == 0 => {
                bad("IF needs n_estimators >= 1 and max_samples >= 1".into())
            }
            Params::Hbos(p) if p.n_bins == 0 || !(p.alpha > 0.0) || !(p.tol >= 0.0) => {
                bad("HBOS needs n_bins >= 1, alpha > 0 and tol >= 0".into())
            }
            Params::Loda(p) if p.n_bins == 0 || p.n_random_cuts == 0 => {
                bad("LODA needs n_bins >= 1 and n_random_cuts >= 1".into())
            }
            Params::Ensemble(p) if p.members.is_empty() => Err(Error::EmptyEnsemble),
            Params::Ensemble(p) if p.members.contains(&Algorithm::Ensemble) => {
                bad("an ensemble cannot contain another ensemble".into())
            }
            Params::Ensemble(p) => p.member_rule.validate(),
            _ => Ok(()),
        }
    }
}

/// Algorithm, parameters and seed. Serialized as
/// `{"algorithm": "IF", "params": {...}, "seed": 0, "standardize": null}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawConfig", into = "RawConfig")]
pub struct DetectorConfig {
    pub params: Params,
    pub seed: u64,
    /// Overrides the per-algorithm standardization default.
    pub standardize: Option<bool>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    algorithm: String,
    #[serde(default)]
    params: serde_json::Value,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    standardize: Option<bool>,
}

impl TryFrom<RawConfig> for DetectorConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let algorithm: Algorithm = raw.algorithm.parse()?;
        let params = Params::from_value(algorithm, raw.params)?;
        params.validate()?;
        Ok(Self {
            params,
            seed: raw.seed,
            standardize: raw.standardize,
        })
    }
}

impl From<DetectorConfig> for RawConfig {
    fn from(c: DetectorConfig) -> Self {
        RawConfig {
            algorithm: c.algorithm().name().to_string(),
            params: c.params.to_value(),
            seed: c.seed,
            standardize: c.standardize,
        }
    }
}

impl DetectorConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            params: Params::default_for(algorithm),
            seed: 0,
            standardize: None,
        }
    }

    pub fn with_params(params: Params) -> Self {
        Self {
            params,
            seed: 0,
            standardize: None,
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn standardize(mut self, on: bool) -> Self {
        self.standardize = Some(on);
        self
    }

    pub fn algorithm(&self) -> Algorithm {
        self.params.algorithm()
    }

    pub fn uses_standardization(&self) -> bool {
        self.standardize.unwrap_or_else(|| self.algorithm().standardizes_by_default())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("detector config: {e}")))?;
        raw.try_into()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()
    }

    /// Smallest training set the algorithm accepts.
    pub fn min_rows(&self) -> usize {
        match &self.params {
            Params::Knn(p) => p.k + 1,
            Params::Lof(p) => p.k + 1,
            Params::Fb(p) => p.k + 1,
            Params::FastAbod(p) => p.k + 1,
            Params::Cblof(p) => p.n_clusters,
            Params::Mcd(_) => 2,
            Params::Ensemble(p) => p
                .members
                .iter()
                .map(|a| DetectorConfig::new(*a).min_rows())
                .max()
                .unwrap_or(1),
            _ => 1,
        }
    }
}

/// How a threshold is derived from the training score distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThresholdRule {
    /// Largest training score times `1 + margin`; assumes clean training data.
    MaxTrain {
        #[serde(default)]
        margin: f64,
    },
    /// The `(1 - ratio)` quantile of the training scores.
    Contamination { ratio: f64 },
}

impl ThresholdRule {
    pub fn max_train() -> Self {
        ThresholdRule::MaxTrain { margin: 0.0 }
    }

    pub fn contamination(ratio: f64) -> Self {
        ThresholdRule::Contamination { ratio }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ThresholdRule::Contamination { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                Err(Error::InvalidContamination(ratio))
            }
            ThresholdRule::MaxTrain { margin } if !margin.is_finite() => {
                Err(Error::InvalidConfig(format!("max_train margin must be finite, got {margin}")))
            }
            _ => Ok(()),
        }
    }

    /// Applies the rule to a score sample.
    pub fn apply(&self, scores: &[f64]) -> Result<f64> {
        self.validate()?;
        if scores.is_empty() {
            return Err(Error::InsufficientData("no training scores to threshold".into()));
        }
        Ok(match *self {
            ThresholdRule::MaxTrain { margin } => {
                scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) * (1.0 + margin)
            }
            ThresholdRule::Contamination { ratio } => {
                let mut sorted = scores.to_vec();
                sorted.sort_by(f64::total_cmp);
                quantile_sorted(&sorted, 1.0 - ratio)
            }
        })
    }
}

/// Quantile with linear interpolation between order statistics at `q (n - 1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// A score together with its decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub score: f64,
    pub normalized_score: f64,
    pub is_anomaly: bool,
    pub threshold_used: f64,
}

/// Majority vote: true when strictly more than half of the decisions are true.
pub fn ensemble_decide(decisions: &[bool]) -> Result<bool> {
    if decisions.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let votes = decisions.iter().filter(|d| **d).count();
    Ok(2 * votes > decisions.len())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub(crate) members: Vec<FittedDetector>,
    pub(crate) thresholds: Vec<f64>,
}

impl EnsembleModel {
    pub fn members(&self) -> &[FittedDetector] {
        &self.members
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn votes(&self, x: &[f64]) -> Result<Vec<bool>> {
        self.members
            .iter()
            .zip(&self.thresholds)
            .map(|(m, t)| Ok(m.score_values(x)? > *t))
            .collect()
    }

    fn vote_fraction(votes: &[bool]) -> f64 {
        votes.iter().filter(|v| **v).count() as f64 / votes.len() as f64
    }
}

/// Trained state of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Knn(KnnModel),
    Mcd(McdModel),
    Lof(LofModel),
    Cblof(CblofModel),
    Ocsvm(OcsvmModel),
    Fb(FeatureBaggingModel),
    FastAbod(FastAbodModel),
    If(IsolationForest),
    Hbos(HbosModel),
    Loda(LodaModel),
    Ensemble(EnsembleModel),
}

/// A trained detector. Immutable; safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedDetector {
    pub(crate) config: DetectorConfig,
    pub(crate) names: Vec<String>,
    pub(crate) scaling: Option<ScalingParams>,
    pub(crate) model: Model,
    /// Raw training rows, kept as the background for model-agnostic explanations.
    pub(crate) train_rows: Vec<Vec<f64>>,
    pub(crate) train_scores: Vec<f64>,
}

/// Trains a detector on the rows of `train`. Labels, if any, are ignored.
pub fn fit(config: &DetectorConfig, train: &FeatureTable) -> Result<FittedDetector> {
    config.validate()?;
    if train.is_empty() || train.n_features() == 0 {
        return Err(Error::InsufficientData("training table is empty".into()));
    }
    let min_rows = config.min_rows();
    if train.n_rows() < min_rows {
        return Err(Error::InsufficientData(format!(
            "{} needs at least {min_rows} training rows, got {}",
            config.algorithm(),
            train.n_rows()
        )));
    }
    if let Some((i, _)) = train.rows().iter().enumerate().find(|(_, r)| r.iter().any(|v| !v.is_finite())) {
        return Err(Error::FeatureMismatch(format!("training row {i} has a non-finite value")));
    }
    let scaling = if config.uses_standardization() {
        Some(ScalingParams::fit(train)?)
    } else {
        None
    };
    let x: Vec<Vec<f64>> = match &scaling {
        Some(s) => train.rows().iter().map(|r| s.apply(r)).collect(),
        None => train.rows().to_vec(),
    };
    let seed = config.seed;
    let (model, train_scores) = match &config.params {
        Params::Knn(p) => {
            let m = KnnModel::new(x, p.k, p.method, p.p);
            let s = (0..m.train.len()).map(|i| m.score(&m.train[i], Some(i))).collect();
            (Model::Knn(m), s)
        }
        Params::Mcd(p) => {
            let m = McdModel::fit(&x, p.assume_centered, p.n_trials, seed)?;
            let s = x.iter().map(|r| m.score(r)).collect();
            (Model::Mcd(m), s)
        }
        Params::Lof(p) => {
            let m = LofModel::fit(x, p.k, p.p);
            let s = (0..m.train.len()).map(|i| m.score(&m.train[i], Some(i))).collect();
            (Model::Lof(m), s)
        }
        Params::Cblof(p) => {
            let (m, s) = CblofModel::fit(&x, p.n_clusters, p.alpha, p.beta, seed)?;
            (Model::Cblof(m), s)
        }
        Params::Ocsvm(p) => {
            let kernel = match p.kernel {
                KernelName::Rbf => Kernel::Rbf { gamma: p.gamma },
                KernelName::Linear => Kernel::Linear,
            };
            let (m, s) = OcsvmModel::fit(&x, kernel, p.nu, p.tol, p.max_iter)?;
            (Model::Ocsvm(m), s)
        }
        Params::Fb(p) => {
            let m = FeatureBaggingModel::fit(&x, p.n_estimators, p.min_fraction, p.max_features, p.k, p.combination, seed);
            let s = (0..x.len()).map(|i| m.score(&x[i], Some(i))).collect();
            (Model::Fb(m), s)
        }
        Params::FastAbod(p) => {
            let m = FastAbodModel::new(x, p.k);
            let s = (0..m.train.len())
                .map(|i| m.score(&m.train[i], Some(i)))
                .collect::<Result<Vec<f64>>>()?;
            (Model::FastAbod(m), s)
        }
        Params::If(p) => {
            let m = IsolationForest::fit(&x, p.n_estimators, p.max_samples, seed);
            let s = x.iter().map(|r| m.score(r)).collect();
            (Model::If(m), s)
        }
        Params::Hbos(p) => {
            let m = HbosModel::fit(&x, p.n_bins, p.alpha, p.tol);
            let s = x.iter().map(|r| m.score(r)).collect();
            (Model::Hbos(m), s)
        }
        Params::Loda(p) => {
            let m = LodaModel::fit(&x, p.n_bins, p.n_random_cuts, seed);
            let s = x.iter().map(|r| m.score(r)).collect();
            (Model::Loda(m), s)
        }
        Params::Ensemble(p) => {
            let table = FeatureTable::new(train.names().to_vec(), x, None)?;
            let mut members = Vec::with_capacity(p.members.len());
            let mut thresholds = Vec::with_capacity(p.members.len());
            for (i, a) in p.members.iter().enumerate() {
                let member = fit(&DetectorConfig::new(*a).seed(seed.wrapping_add(i as u64)), &table)?;
                thresholds.push(member.threshold(&p.member_rule)?);
                members.push(member);
            }
            let s = (0..table.n_rows())
                .map(|r| {
                    let votes: Vec<bool> = members
                        .iter()
                        .zip(&thresholds)
                        .map(|(m, t)| m.train_scores[r] > *t)
                        .collect();
                    EnsembleModel::vote_fraction(&votes)
                })
                .collect();
            (Model::Ensemble(EnsembleModel { members, thresholds }), s)
        }
    };
    Ok(FittedDetector {
        config: config.clone(),
        names: train.names().to_vec(),
        scaling,
        model,
        train_rows: train.rows().to_vec(),
        train_scores,
    })
}

impl FittedDetector {
    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.names
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn scaling(&self) -> Option<&ScalingParams> {
        self.scaling.as_ref()
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    /// The forest, if this is an isolation forest.
    pub fn forest(&self) -> Option<&IsolationForest> {
        match &self.model {
            Model::If(f) => Some(f),
            _ => None,
        }
    }

    /// Training rows in original units.
    pub fn train_rows(&self) -> &[Vec<f64>] {
        &self.train_rows
    }

    /// Scores of the training rows (leave-one-out for the neighbor-based detectors).
    pub fn train_scores(&self) -> &[f64] {
        &self.train_scores
    }

    /// Maps raw feature values into the space the model was fitted in.
    pub fn transform(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaling {
            Some(s) => s.apply(x),
            None => x.to_vec(),
        }
    }

    /// Scores raw feature values given in training column order.
    pub fn score_values(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.names.len() {
            return Err(Error::FeatureMismatch(format!(
                "expected {} features, got {}",
                self.names.len(),
                x.len()
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::FeatureMismatch("sample has a non-finite value".into()));
        }
        self.score_transformed(&self.transform(x))
    }

    /// Scores a sample already in model space.
    pub fn score_transformed(&self, z: &[f64]) -> Result<f64> {
        Ok(match &self.model {
            Model::Knn(m) => m.score(z, None),
            Model::Mcd(m) => m.score(z),
            Model::Lof(m) => m.score(z, None),
            Model::Cblof(m) => m.score(z),
            Model::Ocsvm(m) => m.score(z),
            Model::Fb(m) => m.score(z, None),
            Model::FastAbod(m) => m.score(z, None)?,
            Model::If(m) => m.score(z),
            Model::Hbos(m) => m.score(z),
            Model::Loda(m) => m.score(z),
            Model::Ensemble(m) => EnsembleModel::vote_fraction(&m.votes(z)?),
        })
    }

    /// Scores a named feature vector; names must match the training columns.
    pub fn score(&self, x: &FeatureVector) -> Result<f64> {
        if x.names != self.names {
            return Err(Error::FeatureMismatch(format!(
                "sample features [{}] differ from training features [{}]",
                x.names.join(", "),
                self.names.join(", ")
            )));
        }
        self.score_values(&x.values)
    }

    pub fn score_table(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        table.check_matches(&self.names)?;
        table.rows().iter().map(|r| self.score_values(r)).collect()
    }

    /// Decision threshold. Ensembles always use one half of the vote fraction, which
    /// is a strict majority of members.
    pub fn threshold(&self, rule: &ThresholdRule) -> Result<f64> {
        if let Model::Ensemble(_) = self.model {
            rule.validate()?;
            return Ok(0.5);
        }
        rule.apply(&self.train_scores)
    }

    pub fn decide(&self, score: f64, threshold: f64) -> ScoredSample {
        let lo = self.train_scores.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.train_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let normalized_score = if hi > lo {
            ((score - lo) / (hi - lo)).clamp(0.0, 1.0)
        } else if score > hi {
            1.0
        } else {
            0.0
        };
        ScoredSample {
            score,
            normalized_score,
            is_anomaly: score > threshold,
            threshold_used: threshold,
        }
    }

    pub fn decide_vector(&self, x: &FeatureVector, threshold: f64) -> Result<ScoredSample> {
        Ok(self.decide(self.score(x)?, threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn table(rows: Vec<Vec<f64>>) -> FeatureTable {
        let names = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
        FeatureTable::new(names, rows, None).unwrap()
    }

    fn gaussian(n: usize, p: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..p).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    #[test]
    fn defaults_match_reference_table() {
        let c = DetectorConfig::new(Algorithm::Knn);
        assert_eq!(c.params, Params::Knn(KnnParams { k: 5, method: KnnMethod::Largest, p: 2.0 }));
        assert_eq!(LofParams::default().k, 16);
        let cb = CblofParams::default();
        assert_eq!((cb.n_clusters, cb.alpha, cb.beta), (6, 0.8, 4.0));
        let oc = OcsvmParams::default();
        assert_eq!((oc.kernel, oc.gamma, oc.nu), (KernelName::Rbf, 0.2, 0.7));
        let fb = FbParams::default();
        assert_eq!((fb.n_estimators, fb.max_features, fb.combination), (10, 1.0, Combination::Average));
        assert_eq!(FastAbodParams::default().k, 5);
        let f = IfParams::default();
        assert_eq!((f.n_estimators, f.max_samples), (100, 128));
        let h = HbosParams::default();
        assert_eq!((h.n_bins, h.alpha, h.tol), (5, 0.1, 0.5));
        let l = LodaParams::default();
        assert_eq!((l.n_bins, l.n_random_cuts), (5, 50));
        assert!(!McdParams::default().assume_centered);
    }

    #[test]
    fn config_json_parsing() {
        let c = DetectorConfig::from_json(r#"{"algorithm":"if","params":{"n_estimators":7},"seed":3}"#).unwrap();
        assert_eq!(c.algorithm(), Algorithm::If);
        assert_eq!(c.seed, 3);
        assert_eq!(c.params, Params::If(IfParams { n_estimators: 7, max_samples: 128 }));
        let back = DetectorConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);

        let e = DetectorConfig::from_json(r#"{"algorithm":"Forest"}"#).unwrap_err();
        assert!(e.is_validation());
        assert!(e.to_string().contains("'algorithm'"));
        let e = DetectorConfig::from_json(r#"{"algorithm":"LOF","params":{"kk":3}}"#).unwrap_err();
        assert!(e.to_string().contains("params"));
        assert!(DetectorConfig::from_json(r#"{"algorithm":"OCSVM","params":{"nu":0}}"#).is_err());
    }

    #[test]
    fn algorithm_ids_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(Algorithm::from_id(a.id()), Some(a));
            assert_eq!(a.name().to_lowercase().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!(Algorithm::from_id(11), None);
    }

    #[test]
    fn lof_needs_more_rows_than_k() {
        let t = table(gaussian(10, 2, 0));
        assert!(matches!(fit(&DetectorConfig::new(Algorithm::Lof), &t), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn mcd_constant_column_is_singular() {
        let rows: Vec<Vec<f64>> = gaussian(50, 2, 1).into_iter().map(|r| vec![r[0], r[1], 4.0]).collect();
        let r = fit(&DetectorConfig::new(Algorithm::Mcd), &table(rows));
        assert!(matches!(r, Err(Error::SingularCovariance(_))));
    }

    #[test]
    fn threshold_rules() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert!((ThresholdRule::contamination(0.2).apply(&s).unwrap() - 4.2).abs() < 1e-12);
        assert_eq!(ThresholdRule::max_train().apply(&[1.0, 2.0, 3.0]).unwrap(), 3.0);
        assert_eq!(ThresholdRule::MaxTrain { margin: 0.5 }.apply(&[1.0, 2.0]).unwrap(), 3.0);
        for bad in [1.5, 0.0, 1.0, -0.1] {
            assert!(matches!(
                ThresholdRule::contamination(bad).apply(&s),
                Err(Error::InvalidContamination(_))
            ));
        }
    }

    #[test]
    fn threshold_rule_json() {
        let r: ThresholdRule = serde_json::from_str(r#"{"rule":"contamination","ratio":0.2}"#).unwrap();
        assert_eq!(r, ThresholdRule::contamination(0.2));
        let r: ThresholdRule = serde_json::from_str(r#"{"rule":"max_train"}"#).unwrap();
        assert_eq!(r, ThresholdRule::max_train());
    }

    #[test]
    fn decide_conventions() {
        let t = table((0..20).map(|i| vec![i as f64]).collect());
        let f = fit(&DetectorConfig::new(Algorithm::Knn).standardize(false), &t).unwrap();
        let lo = f.train_scores().iter().cloned().fold(f64::INFINITY, f64::min);
        let s = f.decide(2.0, 2.0);
        assert!(!s.is_anomaly);
        assert_eq!(f.decide(lo, 10.0).normalized_score, 0.0);
        assert_eq!(f.decide(1e9, 10.0).normalized_score, 1.0);
        assert!(f.decide(2.0 + 1e-12, 2.0).is_anomaly);
    }

    #[test]
    fn ensemble_votes() {
        assert!(ensemble_decide(&[true, true, false]).unwrap());
        assert!(!ensemble_decide(&[true, false, false, true]).unwrap());
        assert!(matches!(ensemble_decide(&[]), Err(Error::EmptyEnsemble)));
    }

    #[test]
    fn ensemble_detector_flags_far_point() {
        let t = table(gaussian(80, 3, 5));
        let f = fit(&DetectorConfig::new(Algorithm::Ensemble), &t).unwrap();
        let thr = f.threshold(&ThresholdRule::max_train()).unwrap();
        assert_eq!(thr, 0.5);
        let far = f.score_values(&[20.0, -20.0, 20.0]).unwrap();
        assert_eq!(far, 1.0);
        assert!(f.decide(far, thr).is_anomaly);
        let center = f.score_values(&[0.0, 0.0, 0.0]).unwrap();
        assert!(!f.decide(center, thr).is_anomaly);
    }

    #[test]
    fn score_rejects_wrong_width() {
        let t = table(gaussian(30, 2, 0));
        let f = fit(&DetectorConfig::new(Algorithm::If), &t).unwrap();
        assert!(matches!(f.score_values(&[1.0]), Err(Error::FeatureMismatch(_))));
    }

    #[test]
    fn every_detector_orients_scores_outward() {
        for seed in 0..20u64 {
            let rows = gaussian(60, 3, 100 + seed);
            let diameter = {
                let mut d: f64 = 0.0;
                for a in &rows {
                    for b in &rows {
                        d = d.max(neighbors::minkowski(a, b, 2.0));
                    }
                }
                d
            };
            let t = table(rows);
            // densest region: the row with the smallest 5-NN distance
            let dense = t
                .rows()
                .iter()
                .min_by(|a, b| {
                    let ka = neighbors::k_nearest(t.rows(), a, 6, 2.0, None)[5].0;
                    let kb = neighbors::k_nearest(t.rows(), b, 6, 2.0, None)[5].0;
                    ka.total_cmp(&kb)
                })
                .unwrap()
                .clone();
            let far: Vec<f64> = dense.iter().map(|v| v + 10.0 * diameter).collect();
            for a in Algorithm::ALL {
                if a == Algorithm::Ensemble && seed >= 2 {
                    continue;
                }
                let f = fit(&DetectorConfig::new(a).seed(seed), &t).unwrap();
                let (sd, sf) = (f.score_values(&dense).unwrap(), f.score_values(&far).unwrap());
                assert!(sd <= sf, "{a} seed {seed}: dense {sd} > far {sf}");
            }
        }
    }

    #[test]
    fn stochastic_detectors_are_seed_deterministic() {
        let t = table(gaussian(120, 3, 9));
        for a in [Algorithm::If, Algorithm::Loda, Algorithm::Fb, Algorithm::Cblof, Algorithm::Mcd] {
            let c = DetectorConfig::new(a).seed(11);
            let f1 = fit(&c, &t).unwrap();
            let f2 = fit(&c, &t).unwrap();
            let bits = |f: &FittedDetector| f.train_scores().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&f1), bits(&f2), "{a}");
            let q = [0.3, -1.2, 2.0];
            assert_eq!(f1.score_values(&q).unwrap().to_bits(), f2.score_values(&q).unwrap().to_bits());
        }
    }

    #[test]
    fn fit_on_200_normal_rows_is_reproducible() {
        let t = table(gaussian(200, 4, 21));
        for a in Algorithm::BASE {
            let c = DetectorConfig::new(a).seed(1);
            assert_eq!(fit(&c, &t).unwrap().train_scores(), fit(&c, &t).unwrap().train_scores(), "{a}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn ensemble_decide_is_permutation_symmetric(v in proptest::collection::vec(any::<bool>(), 1..12), rot in 0usize..12) {
            let mut w = v.clone();
            w.rotate_left(rot % v.len());
            w.reverse();
            prop_assert_eq!(ensemble_decide(&v).unwrap(), ensemble_decide(&w).unwrap());
        }

        #[test]
        fn score_ranges(seed in 0u64..1000, qx in -50.0f64..50.0, qy in -50.0f64..50.0) {
            let t = table(gaussian(40, 2, seed));
            let q = [qx, qy];
            let s_if = fit(&DetectorConfig::new(Algorithm::If).seed(seed), &t).unwrap().score_values(&q).unwrap();
            prop_assert!(s_if > 0.0 && s_if <= 1.0);
            let s_hbos = fit(&DetectorConfig::new(Algorithm::Hbos).seed(seed), &t).unwrap().score_values(&q).unwrap();
            // heights never exceed 1, so each contribution is at least -ln(1 + alpha)
            prop_assert!(s_hbos >= 2.0 * -(1.1f64).ln() - 1e-12);
            let s_knn = fit(&DetectorConfig::new(Algorithm::Knn), &t).unwrap().score_values(&q).unwrap();
            prop_assert!(s_knn >= 0.0);
            let s_mcd = fit(&DetectorConfig::new(Algorithm::Mcd).seed(seed), &t).unwrap().score_values(&q).unwrap();
            prop_assert!(s_mcd >= 0.0);
            let s_lof = fit(&DetectorConfig::new(Algorithm::Lof), &t).unwrap().score_values(&q).unwrap();
            prop_assert!(s_lof > 0.0);
        }

        #[test]
        fn contamination_threshold_is_a_training_quantile(mut s in proptest::collection::vec(-1e3f64..1e3, 2..40), c in 0.01f64..0.99) {
            let t = ThresholdRule::contamination(c).apply(&s).unwrap();
            s.sort_by(f64::total_cmp);
            prop_assert!(t >= s[0] && t <= s[s.len() - 1]);
            let above = s.iter().filter(|v| **v > t).count() as f64;
            prop_assert!(above <= (c * s.len() as f64).ceil() + 1.0);
        }
    }
}
