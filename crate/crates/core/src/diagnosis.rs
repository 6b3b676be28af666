//! Turns the importance ranking of a detected anomaly into a fault label or a
//! root-cause ranking.
//!
//! General features (rms, kurtosis) only signal that something is wrong, so they are
//! dropped first. If every remaining feature points at exactly one fault, the label of
//! the top feature is the diagnosis. Otherwise the filtered ranking is handed to a
//! specialist as is.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::detectors::{FittedDetector, ScoredSample};
use crate::error::{Error, Result};
use crate::explain::{local_diffi, shapley_importance, ExplainMethod, ImportanceRanking, ShapleyConfig};
use crate::features::{FeatureSpec, FeatureVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosisMode {
    UnsupervisedClassification,
    RootCauseAnalysis,
}

impl DiagnosisMode {
    /// Classification when every specific feature maps to a single fault, root-cause
    /// analysis otherwise.
    pub fn for_spec(spec: &FeatureSpec) -> Self {
        if spec.has_single_fault_labels() {
            DiagnosisMode::UnsupervisedClassification
        } else {
            DiagnosisMode::RootCauseAnalysis
        }
    }

    /// Checks a requested mode against the spec.
    pub fn validate(self, spec: &FeatureSpec) -> Result<Self> {
        if self == DiagnosisMode::UnsupervisedClassification && !spec.has_single_fault_labels() {
            return Err(Error::InvalidMode(
                "unsupervised classification needs every specific feature tied to exactly one fault label; \
                 use root-cause analysis for this spec"
                    .into(),
            ));
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Explainer {
    Shapley(ShapleyConfig),
    LocalDiffi,
}

impl Explainer {
    pub fn method(&self) -> ExplainMethod {
        match self {
            Explainer::Shapley(_) => ExplainMethod::Shapley,
            Explainer::LocalDiffi => ExplainMethod::LocalDiffi,
        }
    }

    pub fn explain(&self, f: &FittedDetector, x: &FeatureVector) -> Result<ImportanceRanking> {
        match self {
            Explainer::Shapley(cfg) => shapley_importance(f, x, cfg),
            Explainer::LocalDiffi => local_diffi(f, x),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub explain_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_ref: Option<String>,
    pub detected: bool,
    pub decision: ScoredSample,
    pub mode: DiagnosisMode,
    pub fault_label: Option<String>,
    pub filtered_ranking: Option<ImportanceRanking>,
    pub explanation_method: ExplainMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

fn spec_index(spec: &FeatureSpec, name: &str) -> usize {
    spec.index_of(name).unwrap_or(usize::MAX)
}

/// Keeps only specific features, ordered by weight with spec order breaking ties.
pub fn drop_general(r: &ImportanceRanking, spec: &FeatureSpec) -> Result<ImportanceRanking> {
    if let Some(e) = r.entries.iter().find(|e| spec.get(&e.feature).is_none()) {
        return Err(Error::FeatureMismatch(format!("ranked feature '{}' is not in the spec", e.feature)));
    }
    let mut entries: Vec<_> = r.entries.iter().filter(|e| spec.is_specific(&e.feature)).cloned().collect();
    if entries.is_empty() {
        return Err(Error::NoSpecificFeatures);
    }
    entries.sort_by(|a, b| {
        b.weight
            .total_cmp(&a.weight)
            .then(spec_index(spec, &a.feature).cmp(&spec_index(spec, &b.feature)))
    });
    let mut out = r.clone();
    out.degenerate = entries.iter().all(|e| e.weight == 0.0);
    out.entries = entries;
    Ok(out)
}

/// Fault label of the most important specific feature.
pub fn classify(r: &ImportanceRanking, spec: &FeatureSpec) -> Result<String> {
    DiagnosisMode::UnsupervisedClassification.validate(spec)?;
    let filtered = drop_general(r, spec)?;
    let top = filtered.top().expect("non-empty after drop_general");
    spec.fault_label(top)
        .map(str::to_string)
        .ok_or_else(|| Error::InvalidMode(format!("feature '{top}' has no single fault label")))
}

/// The filtered ranking for specialist review.
pub fn root_cause(r: &ImportanceRanking, spec: &FeatureSpec) -> Result<ImportanceRanking> {
    drop_general(r, spec)
}

/// Scores `x`, and if it is anomalous explains and diagnoses it.
pub fn diagnose(
    f: &FittedDetector,
    x: &FeatureVector,
    spec: &FeatureSpec,
    mode: DiagnosisMode,
    explainer: &Explainer,
    threshold: f64,
    with_timings: bool,
) -> Result<DiagnosisReport> {
    let start = Instant::now();
    let mode = mode.validate(spec)?;
    if explainer.method() == ExplainMethod::LocalDiffi && f.forest().is_none() {
        return Err(Error::WrongAlgorithm(format!(
            "Local-DIFFI needs an isolation forest, got {}",
            f.algorithm()
        )));
    }
    let decision = f.decide_vector(x, threshold)?;
    let mut report = DiagnosisReport {
        sample_ref: None,
        detected: decision.is_anomaly,
        decision,
        mode,
        fault_label: None,
        filtered_ranking: None,
        explanation_method: explainer.method(),
        timings: None,
    };
    let mut explain_ms = 0.0;
    if decision.is_anomaly {
        let t = Instant::now();
        let ranking = explainer.explain(f, x)?;
        explain_ms = t.elapsed().as_secs_f64() * 1e3;
        let filtered = root_cause(&ranking, spec)?;
        if mode == DiagnosisMode::UnsupervisedClassification {
            report.fault_label = spec.fault_label(filtered.top().expect("non-empty")).map(str::to_string);
        }
        report.filtered_ranking = Some(filtered);
    }
    if with_timings {
        report.timings = Some(Timings {
            explain_ms,
            total_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(report)
}
