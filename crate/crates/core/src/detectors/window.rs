//! Sequential scoring with a growing training window.
//!
//! The first `init_n` rows train the initial model. Every later row is scored against the
//! current model; rows decided normal join the training set and the model is refit every
//! `refit_every` accepted rows. Anomalous rows never enter the training set.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit, DetectorConfig, FittedDetector, ScoredSample, ThresholdRule};
use crate::error::{Error, Result};
use crate::features::FeatureTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    /// Refit after this many accepted rows.
    pub refit_every: usize,
    /// Fraction of the accumulated training rows left out at random on every refit.
    pub dropout: Option<f64>,
    /// Seed for the dropout draws.
    pub seed: u64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            refit_every: 1,
            dropout: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub index: usize,
    pub warm_up: bool,
    #[serde(flatten)]
    pub scored: ScoredSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRun {
    pub samples: Vec<WindowSample>,
    pub warm_up_len: usize,
    /// Stream rows that ended up in the training set, in arrival order.
    pub training_indices: Vec<usize>,
    pub refits: usize,
}

impl WindowRun {
    /// Decisions for the rows after the warm-up.
    pub fn post_warm_up(&self) -> &[WindowSample] {
        &self.samples[self.warm_up_len..]
    }

    /// Index of the first row flagged at or after `from`.
    pub fn first_flag_from(&self, from: usize) -> Option<usize> {
        self.post_warm_up()
            .iter()
            .find(|s| s.index >= from && s.scored.is_anomaly)
            .map(|s| s.index)
    }
}

struct Trainer<'a> {
    stream: &'a FeatureTable,
    config: &'a DetectorConfig,
    dropout: Option<f64>,
    rng: ChaCha8Rng,
}

impl Trainer<'_> {
    /// Fits on the given rows (minus dropout) and returns the model and the rows used.
    fn fit(&mut self, rows: &[usize]) -> Result<(FittedDetector, Vec<usize>)> {
        let used: Vec<usize> = match self.dropout {
            Some(frac) if frac > 0.0 => {
                let keep = ((1.0 - frac) * rows.len() as f64).round() as usize;
                let keep = keep.clamp(self.config.min_rows().min(rows.len()), rows.len());
                let mut pick = sample(&mut self.rng, rows.len(), keep).into_vec();
                pick.sort_unstable();
                pick.into_iter().map(|i| rows[i]).collect()
            }
            _ => rows.to_vec(),
        };
        let table = self.stream.select(&used).without_labels();
        Ok((fit(self.config, &table)?, used))
    }
}

pub fn sliding_window_run(
    stream: &FeatureTable,
    config: &DetectorConfig,
    init_n: usize,
    rule: &ThresholdRule,
    opts: &WindowOptions,
) -> Result<WindowRun> {
    rule.validate()?;
    if opts.refit_every == 0 {
        return Err(Error::InvalidConfig("refit_every must be at least 1".into()));
    }
    if let Some(d) = opts.dropout {
        if !(0.0..1.0).contains(&d) {
            return Err(Error::InvalidConfig(format!("dropout must lie in [0, 1), got {d}")));
        }
    }
    let min = config.min_rows();
    if init_n < min {
        return Err(Error::InsufficientData(format!(
            "initial window of {init_n} rows is below the {min} rows {} needs",
            config.algorithm()
        )));
    }
    if stream.n_rows() < init_n {
        return Err(Error::InsufficientData(format!(
            "stream has {} rows, fewer than the initial window of {init_n}",
            stream.n_rows()
        )));
    }
    let mut trainer = Trainer {
        stream,
        config,
        dropout: opts.dropout,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
    };
    let mut training: Vec<usize> = (0..init_n).collect();
    let (mut det, used) = trainer.fit(&training)?;
    let mut thr = det.threshold(rule)?;
    let mut refits = 1;

    let mut samples = Vec::with_capacity(stream.n_rows());
    for i in 0..init_n {
        let score = match used.binary_search(&i) {
            Ok(pos) => det.train_scores()[pos],
            Err(_) => det.score_values(&stream.rows()[i])?,
        };
        samples.push(WindowSample {
            index: i,
            warm_up: true,
            scored: det.decide(score, thr),
        });
    }

    let mut pending = 0;
    for i in init_n..stream.n_rows() {
        let scored = det.decide(det.score_values(&stream.rows()[i])?, thr);
        samples.push(WindowSample {
            index: i,
            warm_up: false,
            scored,
        });
        if !scored.is_anomaly {
            training.push(i);
            pending += 1;
            if pending >= opts.refit_every {
                det = trainer.fit(&training)?.0;
                thr = det.threshold(rule)?;
                refits += 1;
                pending = 0;
            }
        }
    }
    Ok(WindowRun {
        samples,
        warm_up_len: init_n,
        training_indices: training,
        refits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::Algorithm;

    fn table(rows: Vec<Vec<f64>>) -> FeatureTable {
        let names = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
        FeatureTable::new(names, rows, None).unwrap()
    }

    #[test]
    fn constant_stream_stays_normal() {
        let t = table(vec![vec![1.0, 2.0]; 150]);
        let run = sliding_window_run(
            &t,
            &DetectorConfig::new(Algorithm::If),
            100,
            &ThresholdRule::max_train(),
            &WindowOptions::default(),
        )
        .unwrap();
        assert!(run.samples.iter().all(|s| !s.scored.is_anomaly));
        assert_eq!(run.training_indices.len(), 150);
        assert_eq!(run.samples.iter().filter(|s| s.warm_up).count(), 100);
    }

    #[test]
    fn anomalies_never_join_training() {
        let mut rows: Vec<Vec<f64>> = (0..120).map(|i| vec![(i % 10) as f64 * 0.1, (i % 7) as f64 * 0.1]).collect();
        for i in 0..10 {
            rows.push(vec![50.0 + i as f64, -50.0]);
        }
        let t = table(rows);
        for refit_every in [1, 4] {
            let opts = WindowOptions {
                refit_every,
                dropout: Some(0.05),
                seed: 3,
            };
            let run = sliding_window_run(&t, &DetectorConfig::new(Algorithm::Knn), 100, &ThresholdRule::max_train(), &opts).unwrap();
            for s in run.post_warm_up() {
                assert_eq!(run.training_indices.contains(&s.index), !s.scored.is_anomaly);
            }
            assert!(run.samples[120..].iter().all(|s| s.scored.is_anomaly));
        }
    }

    #[test]
    fn preconditions() {
        let t = table(vec![vec![0.0]; 10]);
        let lof = DetectorConfig::new(Algorithm::Lof);
        let r = sliding_window_run(&t, &lof, 10, &ThresholdRule::max_train(), &WindowOptions::default());
        assert!(matches!(r, Err(Error::InsufficientData(_))));
        let r = sliding_window_run(&t, &DetectorConfig::new(Algorithm::If), 20, &ThresholdRule::max_train(), &WindowOptions::default());
        assert!(matches!(r, Err(Error::InsufficientData(_))));
    }
}
