//! Detection metrics and the repeated-split and sliding-window experiment protocols.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detectors::{fit, sliding_window_run, DetectorConfig, ThresholdRule, WindowOptions};
use crate::error::{Error, Result};
use crate::features::FeatureTable;

/// Counts with anomaly as the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// F1 is uninformative when there are no true positives.
    pub fn f1_is_degenerate(&self) -> bool {
        self.tp == 0
    }
}

pub fn confusion_matrix(pred: &[bool], truth: &[bool]) -> Result<ConfusionMatrix> {
    if pred.len() != truth.len() {
        return Err(Error::FeatureMismatch(format!(
            "{} predictions for {} labels",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("no predictions to evaluate".into()));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

/// `2TP / (2TP + FP + FN)`, or 0 when that is undefined.
pub fn f1_score(cm: &ConfusionMatrix) -> f64 {
    let den = 2 * cm.tp + cm.fp + cm.fn_;
    if den == 0 {
        0.0
    } else {
        2.0 * cm.tp as f64 / den as f64
    }
}

/// Average precision: `sum (R_i - R_{i-1}) P_i` over descending score thresholds, with
/// tied scores entering together.
pub fn pr_auc(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::FeatureMismatch(format!(
            "{} scores for {} labels",
            scores.len(),
            truth.len()
        )));
    }
    let positives = truth.iter().filter(|t| **t).count();
    if positives == 0 {
        return Err(Error::InsufficientData("precision-recall needs at least one anomaly".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let (mut tp, mut seen) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            tp += truth[order[i]] as usize;
            seen += 1;
            i += 1;
        }
        let recall = tp as f64 / positives as f64;
        let precision = tp as f64 / seen as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitRule {
    /// Training set composed of `normal_frac` normals and `anomaly_frac` anomalies.
    Static { normal_frac: f64, anomaly_frac: f64 },
    /// Growing window with random exclusion on every refit.
    Dynamic { init_n: usize, dropout: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub seed: u64,
    pub confusion: ConfusionMatrix,
    pub f1: f64,
    pub f1_degenerate: bool,
    /// Absent when the evaluated rows contain no anomaly.
    pub pr_auc: Option<f64>,
    /// Rows between the first true anomaly and the first flag at or after it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_delay: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub false_alarms_before_onset: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    /// Sample standard deviation; 0 for a single value.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Self { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub f1: MeanStd,
    pub pr_auc: Option<MeanStd>,
    pub tp: MeanStd,
    pub fp: MeanStd,
    #[serde(rename = "fn")]
    pub fn_: MeanStd,
    pub tn: MeanStd,
}

impl Aggregate {
    fn of(its: &[IterationMetrics]) -> Self {
        let col = |f: &dyn Fn(&IterationMetrics) -> f64| -> MeanStd {
            MeanStd::of(&its.iter().map(f).collect::<Vec<_>>()).expect("at least one iteration")
        };
        let auc: Vec<f64> = its.iter().filter_map(|m| m.pr_auc).collect();
        Self {
            f1: col(&|m| m.f1),
            pr_auc: MeanStd::of(&auc),
            tp: col(&|m| m.confusion.tp as f64),
            fp: col(&|m| m.confusion.fp as f64),
            fn_: col(&|m| m.confusion.fn_ as f64),
            tn: col(&|m| m.confusion.tn as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub iterations: usize,
    pub split_rule: SplitRule,
    pub seed: u64,
    pub algorithm: String,
    pub per_iteration: Vec<IterationMetrics>,
    pub aggregate: Aggregate,
}

impl EvalRun {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("eval run serializes")
    }

    /// One row per iteration.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "iteration",
            "seed",
            "tp",
            "fp",
            "fn",
            "tn",
            "f1",
            "pr_auc",
            "detection_delay",
            "false_alarms_before_onset",
        ])?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        for m in &self.per_iteration {
            w.write_record([
                m.iteration.to_string(),
                m.seed.to_string(),
                m.confusion.tp.to_string(),
                m.confusion.fp.to_string(),
                m.confusion.fn_.to_string(),
                m.confusion.tn.to_string(),
                m.f1.to_string(),
                opt(m.pr_auc.map(|v| v.to_string())),
                opt(m.detection_delay.map(|v| v.to_string())),
                opt(m.false_alarms_before_onset.map(|v| v.to_string())),
            ])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn metrics(iteration: usize, seed: u64, pred: &[bool], scores: &[f64], truth: &[bool]) -> Result<IterationMetrics> {
    let confusion = confusion_matrix(pred, truth)?;
    let pr_auc = if truth.iter().any(|t| *t) {
        Some(pr_auc(scores, truth)?)
    } else {
        None
    };
    Ok(IterationMetrics {
        iteration,
        seed,
        f1: f1_score(&confusion),
        f1_degenerate: confusion.f1_is_degenerate(),
        confusion,
        pr_auc,
        detection_delay: None,
        false_alarms_before_onset: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticOptions {
    pub normal_frac: f64,
    pub anomaly_frac: f64,
    pub seed: u64,
    /// Seed increment between iterations; 0 repeats the same split.
    pub seed_stride: u64,
}

impl Default for StaticOptions {
    fn default() -> Self {
        Self {
            normal_frac: 0.8,
            anomaly_frac: 0.2,
            seed: 0,
            seed_stride: 1,
        }
    }
}

/// Row indices of one static split, both sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct StaticSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Anomaly fraction of the training rows.
    pub contamination: f64,
}

/// Draws `normal_frac` of the normal rows plus enough anomalies to make up
/// `anomaly_frac` of the training set; everything else is test data.
pub fn static_split(labels: &[bool], opts: &StaticOptions, seed: u64) -> Result<StaticSplit> {
    for (name, f) in [("normal_frac", opts.normal_frac), ("anomaly_frac", opts.anomaly_frac)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {f}")));
        }
    }
    let normals: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let anomalies: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let n_train_norm = (opts.normal_frac * normals.len() as f64).round() as usize;
    let n_train_anom =
        (opts.anomaly_frac / (1.0 - opts.anomaly_frac) * n_train_norm as f64).round() as usize;
    if n_train_norm == 0 || n_train_norm >= normals.len() {
        return Err(Error::InsufficientData(format!(
            "{} normal rows cannot be split into training and test",
            normals.len()
        )));
    }
    if n_train_anom == 0 || n_train_anom >= anomalies.len() {
        return Err(Error::InsufficientData(format!(
            "{} anomalous rows are too few to put {n_train_anom} in training and keep some for testing",
            anomalies.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut norm = normals;
    let mut anom = anomalies;
    norm.shuffle(&mut rng);
    anom.shuffle(&mut rng);
    let mut train: Vec<usize> = norm[..n_train_norm].iter().chain(&anom[..n_train_anom]).copied().collect();
    train.sort_unstable();
    let mut test: Vec<usize> = norm[n_train_norm..].iter().chain(&anom[n_train_anom..]).copied().collect();
    test.sort_unstable();
    Ok(StaticSplit {
        train,
        test,
        contamination: n_train_anom as f64 / (n_train_norm + n_train_anom) as f64,
    })
}

/// Repeated random splits. Each iteration trains on `normal_frac` of the normal rows
/// plus enough anomalies to make up `anomaly_frac` of the training set, thresholds at
/// that known contamination, and scores the remaining rows.
pub fn run_static_experiment(
    table: &FeatureTable,
    config: &DetectorConfig,
    iters: usize,
    opts: &StaticOptions,
) -> Result<EvalRun> {
    if iters == 0 {
        return Err(Error::InvalidConfig("iterations must be at least 1".into()));
    }
    for (name, f) in [("normal_frac", opts.normal_frac), ("anomaly_frac", opts.anomaly_frac)] {
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1), got {f}")));
        }
    }
    let labels = table
        .labels()
        .ok_or_else(|| Error::InsufficientData("static experiment needs a labeled table".into()))?;
    static_split(labels, opts, opts.seed)?;

    let per_iteration = (0..iters)
        .into_par_iter()
        .map(|it| -> Result<IterationMetrics> {
            let seed = opts.seed.wrapping_add(opts.seed_stride.wrapping_mul(it as u64));
            let StaticSplit { train, test, contamination } = static_split(labels, opts, seed)?;
            let rule = ThresholdRule::contamination(contamination);
            let det = fit(&config.clone().seed(config.seed.wrapping_add(seed)), &table.select(&train).without_labels())?;
            let thr = det.threshold(&rule)?;
            let scores: Vec<f64> = test
                .iter()
                .map(|&i| det.score_values(&table.rows()[i]))
                .collect::<Result<_>>()?;
            let pred: Vec<bool> = scores.iter().map(|s| det.decide(*s, thr).is_anomaly).collect();
            let truth: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
            metrics(it, seed, &pred, &scores, &truth)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalRun {
        iterations: iters,
        split_rule: SplitRule::Static {
            normal_frac: opts.normal_frac,
            anomaly_frac: opts.anomaly_frac,
        },
        seed: opts.seed,
        algorithm: config.algorithm().name().to_string(),
        aggregate: Aggregate::of(&per_iteration),
        per_iteration,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicOptions {
    pub init_n: usize,
    /// Fraction of the training rows left out at random on every refit.
    pub dropout: f64,
    pub rule: ThresholdRule,
    pub refit_every: usize,
    pub seed: u64,
}

impl Default for DynamicOptions {
    fn default() -> Self {
        Self {
            init_n: 100,
            dropout: 0.05,
            rule: ThresholdRule::max_train(),
            refit_every: 1,
            seed: 0,
        }
    }
}

/// Repeated sliding-window runs over an ordered labeled stream. Warm-up rows are not
/// evaluated. Each repeat uses its own seed for the detector and the dropout draws.
pub fn run_dynamic_experiment(
    stream: &FeatureTable,
    config: &DetectorConfig,
    repeats: usize,
    opts: &DynamicOptions,
) -> Result<EvalRun> {
    if repeats == 0 {
        return Err(Error::InvalidConfig("repeats must be at least 1".into()));
    }
    let labels = stream
        .labels()
        .ok_or_else(|| Error::InsufficientData("dynamic experiment needs a labeled stream".into()))?
        .to_vec();
    let onset = labels.iter().position(|l| *l);
    let unlabeled = stream.without_labels();
    let per_iteration = (0..repeats)
        .into_par_iter()
        .map(|r| -> Result<IterationMetrics> {
            let seed = opts.seed.wrapping_add(r as u64);
            let wopts = WindowOptions {
                refit_every: opts.refit_every,
                dropout: (opts.dropout > 0.0).then_some(opts.dropout),
                seed,
            };
            let cfg = config.clone().seed(config.seed.wrapping_add(seed));
            let run = sliding_window_run(&unlabeled, &cfg, opts.init_n, &opts.rule, &wopts)?;
            let post = run.post_warm_up();
            let pred: Vec<bool> = post.iter().map(|s| s.scored.is_anomaly).collect();
            let scores: Vec<f64> = post.iter().map(|s| s.scored.score).collect();
            let truth: Vec<bool> = post.iter().map(|s| labels[s.index]).collect();
            if pred.is_empty() {
                return Err(Error::InsufficientData("stream has no rows after the warm-up".into()));
            }
            let mut m = metrics(r, seed, &pred, &scores, &truth)?;
            if let Some(on) = onset {
                m.detection_delay = run.first_flag_from(on).map(|i| i - on);
                m.false_alarms_before_onset =
                    Some(post.iter().filter(|s| s.index < on && s.scored.is_anomaly).count());
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalRun {
        iterations: repeats,
        split_rule: SplitRule::Dynamic {
            init_n: opts.init_n,
            dropout: opts.dropout,
        },
        seed: opts.seed,
        algorithm: config.algorithm().name().to_string(),
        aggregate: Aggregate::of(&per_iteration),
        per_iteration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::Algorithm;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    /// Average precision by sweeping every distinct score as a threshold.
    fn brute_ap(scores: &[f64], truth: &[bool]) -> f64 {
        let mut thresholds: Vec<f64> = scores.to_vec();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let pos = truth.iter().filter(|t| **t).count() as f64;
        let mut ap = 0.0;
        let mut prev_r = 0.0;
        for t in thresholds {
            let flagged: Vec<usize> = (0..scores.len()).filter(|&i| scores[i] >= t).collect();
            let tp = flagged.iter().filter(|&&i| truth[i]).count() as f64;
            let r = tp / pos;
            ap += (r - prev_r) * tp / flagged.len() as f64;
            prev_r = r;
        }
        ap
    }

    #[test]
    fn confusion_examples() {
        let t = [true, true, true, true, true, false, false, false, false, false];
        assert_eq!(
            confusion_matrix(&t, &t).unwrap(),
            ConfusionMatrix { tp: 5, fp: 0, fn_: 0, tn: 5 }
        );
        let cm = confusion_matrix(&[false; 5], &[true, true, true, false, false]).unwrap();
        assert_eq!(cm.fn_, 3);
        assert_eq!(
            confusion_matrix(&[true, false, true], &[true, true, false]).unwrap(),
            ConfusionMatrix { tp: 1, fp: 1, fn_: 1, tn: 0 }
        );
        assert!(confusion_matrix(&[], &[]).is_err());
        assert!(confusion_matrix(&[true], &[true, false]).is_err());
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1_score(&ConfusionMatrix { tp: 1, fp: 0, fn_: 0, tn: 0 }), 1.0);
        let cm = ConfusionMatrix { tp: 428, fp: 0, fn_: 25, tn: 0 };
        assert!((f1_score(&cm) - 0.9716).abs() < 5e-5);
        let zero = ConfusionMatrix { tp: 0, fp: 3, fn_: 2, tn: 1 };
        assert_eq!(f1_score(&zero), 0.0);
        assert!(zero.f1_is_degenerate());
        assert_eq!(f1_score(&ConfusionMatrix::default()), 0.0);
    }

    #[test]
    fn pr_auc_examples() {
        assert_eq!(pr_auc(&[0.9, 0.8, 0.1, 0.2], &[true, true, false, false]).unwrap(), 1.0);
        let truth = [true, false, false, true, false];
        assert!((pr_auc(&[1.0; 5], &truth).unwrap() - 0.4).abs() < 1e-15);
        let s = [0.9, 0.4, 0.7, 0.7, 0.1, 0.3];
        let t = [true, false, true, false, false, true];
        let got = pr_auc(&s, &t).unwrap();
        assert!((got - brute_ap(&s, &t)).abs() < 1e-15);
        // by hand: thresholds 0.9 (R 1/3, P 1), 0.7 (R 2/3, P 2/3), 0.4, 0.3 (R 1, P 3/5)
        assert!((got - (1.0 / 3.0 + 1.0 / 3.0 * 2.0 / 3.0 + 1.0 / 3.0 * 0.6)).abs() < 1e-12);
        assert!(pr_auc(&[1.0], &[false]).is_err());
    }

    fn labeled_blobs(n_norm: usize, n_anom: usize, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n_norm + n_anom {
            let z: Vec<f64> = (0..3).map(|_| StandardNormal.sample(&mut rng)).collect();
            let row = if i < n_norm {
                z
            } else {
                // scattered shell well outside the normal cloud
                let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let radius = 6.0 + 4.0 * rand::Rng::random::<f64>(&mut rng);
                z.iter().map(|v| v / norm * radius).collect()
            };
            rows.push(row);
            labels.push(i >= n_norm);
        }
        FeatureTable::new(vec!["a".into(), "b".into(), "c".into()], rows, Some(labels)).unwrap()
    }

    #[test]
    fn static_experiment_runs_and_aggregates() {
        let t = labeled_blobs(100, 60, 1);
        let cfg = DetectorConfig::new(Algorithm::Knn);
        let run = run_static_experiment(&t, &cfg, 5, &StaticOptions::default()).unwrap();
        assert_eq!(run.per_iteration.len(), 5);
        // 80 normals + 20 anomalies train; 20 + 40 test
        assert_eq!(run.per_iteration[0].confusion.total(), 60);
        assert!(run.aggregate.f1.mean > 0.9);
        let same = StaticOptions {
            seed_stride: 0,
            ..Default::default()
        };
        let r = run_static_experiment(&t, &cfg, 4, &same).unwrap();
        assert_eq!(r.aggregate.f1.std, 0.0);
        let one = run_static_experiment(&t, &cfg, 1, &StaticOptions::default()).unwrap();
        assert_eq!(one.to_json(), run_static_experiment(&t, &cfg, 1, &StaticOptions::default()).unwrap().to_json());
        assert_eq!(one.to_csv().unwrap().lines().count(), 2);
    }

    #[test]
    fn static_experiment_needs_anomalies() {
        let t = labeled_blobs(50, 0, 1);
        let r = run_static_experiment(&t, &DetectorConfig::new(Algorithm::If), 1, &StaticOptions::default());
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }

    #[test]
    fn constant_stream_has_no_positives() {
        let t = FeatureTable::new(vec!["a".into()], vec![vec![1.0]; 130], Some(vec![false; 130])).unwrap();
        let run = run_dynamic_experiment(&t, &DetectorConfig::new(Algorithm::If), 1, &DynamicOptions::default()).unwrap();
        let m = &run.per_iteration[0];
        assert!(m.f1_degenerate);
        assert!(m.pr_auc.is_none());
        assert_eq!(m.confusion.total(), 30);
    }

    #[test]
    fn single_repeat_is_one_window_run() {
        let mut rows: Vec<Vec<f64>> = (0..150).map(|i| vec![(i % 9) as f64 * 0.1]).collect();
        let mut labels = vec![false; 150];
        for i in 0..10 {
            rows.push(vec![10.0 + i as f64]);
            labels.push(true);
        }
        let t = FeatureTable::new(vec!["a".into()], rows, Some(labels.clone())).unwrap();
        let cfg = DetectorConfig::new(Algorithm::Knn);
        let opts = DynamicOptions {
            dropout: 0.0,
            ..Default::default()
        };
        let run = run_dynamic_experiment(&t, &cfg, 1, &opts).unwrap();
        let w = sliding_window_run(&t.without_labels(), &cfg, 100, &ThresholdRule::max_train(), &WindowOptions::default()).unwrap();
        let pred: Vec<bool> = w.post_warm_up().iter().map(|s| s.scored.is_anomaly).collect();
        let cm = confusion_matrix(&pred, &labels[100..]).unwrap();
        assert_eq!(run.per_iteration[0].confusion, cm);
        assert_eq!(run.per_iteration[0].detection_delay, Some(0));
    }

    proptest! {
        #[test]
        fn pr_auc_is_rank_invariant(
            s in proptest::collection::vec(-5.0f64..5.0, 2..30),
            seed in 0u64..1000,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut truth: Vec<bool> = s.iter().map(|_| rand::Rng::random::<bool>(&mut rng)).collect();
            truth[0] = true;
            let a = pr_auc(&s, &truth).unwrap();
            let t: Vec<f64> = s.iter().map(|v| (v * 0.5).exp() + 3.0).collect();
            prop_assert!((a - pr_auc(&t, &truth).unwrap()).abs() < 1e-12);
            prop_assert!((a - brute_ap(&s, &truth)).abs() < 1e-12);
        }

        #[test]
        fn confusion_is_permutation_invariant(
            pairs in proptest::collection::vec((any::<bool>(), any::<bool>()), 1..40),
            seed in 0u64..1000,
        ) {
            let (p, t): (Vec<bool>, Vec<bool>) = pairs.iter().copied().unzip();
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (ps, ts): (Vec<bool>, Vec<bool>) = shuffled.into_iter().unzip();
            let a = confusion_matrix(&p, &t).unwrap();
            prop_assert_eq!(a, confusion_matrix(&ps, &ts).unwrap());
            prop_assert_eq!(f1_score(&a), f1_score(&confusion_matrix(&ps, &ts).unwrap()));
        }
    }
}
