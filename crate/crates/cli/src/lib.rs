//! Command-line frontend: dataset generation, feature extraction, model fitting,
//! scoring, explanation, diagnosis, evaluation and the full pipeline from a manifest.
//!
//! Every failure is reported as one line `error[E_CODE]: message` on stderr. The exit
//! code is 2 for configuration or validation failures and 1 for runtime failures.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use vibro_ad::detectors::{fit, Algorithm, DetectorConfig, FittedDetector, ThresholdRule};
use vibro_ad::diagnosis::{diagnose, DiagnosisMode, DiagnosisReport, Explainer};
use vibro_ad::eval::{
    confusion_matrix, f1_score, pr_auc, run_dynamic_experiment, run_static_experiment, ConfusionMatrix,
    DynamicOptions, StaticOptions,
};
use vibro_ad::explain::{ExplainMethod, ShapleyConfig};
use vibro_ad::features::{extract, FeatureSpec, FeatureTable};
use vibro_ad::io;
use vibro_ad::synth::{generate_dataset, CaseStyle, DatasetParams};
use vibro_ad::Error;

pub const THREADS_ENV: &str = "VIBRO_AD_THREADS";

/// A failure with its machine-readable code.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
    pub validation: bool,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: "E_USAGE",
            message: message.into(),
            validation: true,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.validation {
            2
        } else {
            1
        }
    }

    /// The single line printed on stderr.
    pub fn line(&self) -> String {
        let msg: Vec<&str> = self.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{}]: {}", self.code, msg.join("; "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: e.code(),
            validation: e.is_validation(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    Error::InvalidConfig(msg.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "vibro-ad", version, about = "Unsupervised fault detection and diagnosis for vibration data")]
pub struct Cli {
    /// Seed for every random choice; overrides seeds in config files.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Detector config JSON (fit, eval, run) or dataset params JSON (synth).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file or directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Style {
    Bearing,
    Gearbox,
    Mechanical,
}

impl From<Style> for CaseStyle {
    fn from(s: Style) -> Self {
        match s {
            Style::Bearing => CaseStyle::BearingRunToFailure,
            Style::Gearbox => CaseStyle::GearboxStatic,
            Style::Mechanical => CaseStyle::MechanicalStatic,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Protocol {
    Static,
    Dynamic,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Extract a feature table from a directory of signal files (.csv, .bin, .vib).
    Extract {
        #[arg(long)]
        signals: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// Sample rate for CSV signals without a header.
        #[arg(long)]
        sample_rate: Option<f64>,
    },
    /// Fit a detector and save it as a model file.
    Fit {
        #[arg(long)]
        train: PathBuf,
        /// Detector to use with default parameters when --config is not given.
        #[arg(long)]
        algorithm: Option<String>,
        /// Drop rows labeled anomalous before fitting.
        #[arg(long)]
        normal_only: bool,
    },
    /// Score every row of a feature table.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// max_train, max_train:<margin> or contamination:<ratio>.
        #[arg(long, default_value = "max_train")]
        threshold: String,
    },
    /// Rank the features of one row by importance.
    Explain {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Zero-based row index.
        #[arg(long)]
        row: usize,
        /// local_diffi, shapley or auto.
        #[arg(long, default_value = "auto")]
        explainer: String,
        #[arg(long, default_value = "max_train")]
        threshold: String,
    },
    /// Detect and diagnose every row of a feature table, one JSON report per line.
    Diagnose {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        /// auto, classification or root_cause.
        #[arg(long, default_value = "auto")]
        mode: String,
        #[arg(long, default_value = "auto")]
        explainer: String,
        #[arg(long, default_value = "max_train")]
        threshold: String,
    },
    /// Repeated train/test evaluation on a labeled feature table.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value = "static")]
        protocol: Protocol,
        #[arg(long)]
        algorithm: Option<String>,
        #[arg(long, default_value_t = 10)]
        iterations: usize,
        #[arg(long, default_value_t = 0.8)]
        normal_frac: f64,
        #[arg(long, default_value_t = 0.2)]
        anomaly_frac: f64,
        /// Initial training rows of the dynamic protocol.
        #[arg(long, default_value_t = 100)]
        init_n: usize,
        /// Threshold rule of the dynamic protocol.
        #[arg(long, default_value = "max_train")]
        threshold: String,
    },
    /// Generate a synthetic labeled dataset with ground truth.
    Synth {
        #[arg(long, value_enum)]
        style: Option<Style>,
    },
    /// Run the whole pipeline described by a manifest.
    Run {
        #[arg(long)]
        manifest: PathBuf,
    },
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            let err = CliError::usage(first.trim_start_matches("error:").trim());
            eprintln!("{}", err.line());
            return err.exit_code();
        }
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| invalid(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Extract {
            signals,
            spec,
            sample_rate,
        } => {
            let spec = load_spec(spec)?;
            let table = extract_dir(signals, &spec, *sample_rate)?;
            let out = require_out(cli)?;
            io::save_table(out, &table)?;
            Ok(())
        }
        Command::Fit {
            train,
            algorithm,
            normal_only,
        } => {
            let cfg = detector_config(cli, algorithm.as_deref())?;
            let mut table = io::load_table(train)?;
            if *normal_only {
                if let Some(labels) = table.labels() {
                    let keep: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
                    table = table.select(&keep);
                }
            }
            let model = fit(&cfg, &table.without_labels())?;
            io::save_model(require_out(cli)?, &model)?;
            Ok(())
        }
        Command::Score {
            model,
            input,
            threshold,
        } => {
            let model = io::load_model(model)?;
            let table = io::load_table(input)?;
            let thr = model.threshold(&parse_threshold(threshold)?)?;
            let rows = score_rows(&model, &table, &(0..table.n_rows()).collect::<Vec<_>>(), thr)?;
            let mut buf = Vec::new();
            io::write_records(&mut buf, &rows)?;
            emit(cli.out.as_deref(), &buf)
        }
        Command::Explain {
            model,
            input,
            row,
            explainer,
            threshold,
        } => {
            let model = io::load_model(model)?;
            let table = io::load_table(input)?;
            if *row >= table.n_rows() {
                return Err(invalid(format!("field 'row': {row} is out of range for {} rows", table.n_rows())));
            }
            let x = table.row(*row);
            let thr = model.threshold(&parse_threshold(threshold)?)?;
            let decision = model.decide_vector(&x, thr)?;
            let explainer = resolve_explainer(&ExplainerChoice::Name(explainer.clone()), &model, cli.seed)?;
            let mut ranking = explainer.explain(&model, &x)?.with_sample_ref(format!("row {row}"));
            if !decision.is_anomaly {
                ranking.notes.push(format!(
                    "sample is not flagged as anomalous (score {} <= threshold {})",
                    decision.score, thr
                ));
            }
            let out = serde_json::json!({ "decision": decision, "ranking": ranking });
            emit(cli.out.as_deref(), format!("{}\n", serde_json::to_string_pretty(&out).expect("json")).as_bytes())
        }
        Command::Diagnose {
            model,
            input,
            spec,
            mode,
            explainer,
            threshold,
        } => {
            let model = io::load_model(model)?;
            let table = io::load_table(input)?;
            let spec = load_spec(spec)?;
            let mode = parse_mode(mode, &spec)?;
            let explainer = resolve_explainer(&ExplainerChoice::Name(explainer.clone()), &model, cli.seed)?;
            let thr = model.threshold(&parse_threshold(threshold)?)?;
            let reports = diagnose_rows(&model, &table, &(0..table.n_rows()).collect::<Vec<_>>(), &spec, mode, &explainer, thr)?;
            let mut buf = Vec::new();
            io::write_jsonl(&mut buf, &reports)?;
            emit(cli.out.as_deref(), &buf)
        }
        Command::Eval {
            data,
            protocol,
            algorithm,
            iterations,
            normal_frac,
            anomaly_frac,
            init_n,
            threshold,
        } => {
            let cfg = detector_config(cli, algorithm.as_deref())?;
            let table = io::load_table(data)?;
            let seed = cli.seed.unwrap_or(0);
            let run = match protocol {
                Protocol::Static => run_static_experiment(
                    &table,
                    &cfg,
                    *iterations,
                    &StaticOptions {
                        normal_frac: *normal_frac,
                        anomaly_frac: *anomaly_frac,
                        seed,
                        ..Default::default()
                    },
                )?,
                Protocol::Dynamic => run_dynamic_experiment(
                    &table,
                    &cfg,
                    *iterations,
                    &DynamicOptions {
                        init_n: *init_n,
                        rule: parse_threshold(threshold)?,
                        seed,
                        ..Default::default()
                    },
                )?,
            };
            let dir = require_out(cli)?;
            fs::create_dir_all(dir)?;
            fs::write(dir.join("eval.json"), run.to_json() + "\n")?;
            fs::write(dir.join("eval.csv"), run.to_csv()?)?;
            Ok(())
        }
        Command::Synth { style } => {
            let mut params = match (&cli.config, style) {
                (Some(p), _) => DatasetParams::from_json(&read_text(p, "config")?)?,
                (None, Some(s)) => DatasetParams::default_for((*s).into()),
                (None, None) => return Err(CliError::usage("synth needs --style or --config")),
            };
            if let Some(s) = style {
                if params.style() != CaseStyle::from(*s) {
                    return Err(invalid("field 'case_style' in --config disagrees with --style"));
                }
            }
            if let Some(seed) = cli.seed {
                params = params.with_seed(seed);
            }
            let ds = generate_dataset(&params)?;
            let dir = require_out(cli)?;
            fs::create_dir_all(dir)?;
            io::save_table(&dir.join("features.csv"), &ds.table)?;
            fs::write(dir.join("spec.json"), ds.spec.to_json() + "\n")?;
            fs::write(
                dir.join("truth.json"),
                serde_json::to_string_pretty(&ds.truth).expect("truth serializes") + "\n",
            )?;
            Ok(())
        }
        Command::Run { manifest } => {
            let m = RunManifest::load(manifest)?;
            run_manifest(&m, cli)
        }
    }
}

fn require_out(cli: &Cli) -> CliResult<&Path> {
    cli.out.as_deref().ok_or_else(|| CliError::usage("this command needs --out"))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, bytes)?,
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn read_text(path: &Path, field: &str) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| invalid(format!("field '{field}': cannot read {}: {e}", path.display())))
}

fn load_spec(path: &Path) -> CliResult<FeatureSpec> {
    Ok(FeatureSpec::from_json(&read_text(path, "spec")?)?)
}

/// Reads `--config` if given, else the default config of `algorithm`. `--seed` wins.
fn detector_config(cli: &Cli, algorithm: Option<&str>) -> CliResult<DetectorConfig> {
    let cfg = match (&cli.config, algorithm) {
        (Some(p), None) => DetectorConfig::from_json(&read_text(p, "config")?)?,
        (None, Some(a)) => DetectorConfig::new(a.parse::<Algorithm>()?),
        (Some(_), Some(_)) => return Err(CliError::usage("give either --config or --algorithm, not both")),
        (None, None) => return Err(CliError::usage("a detector is needed: pass --config or --algorithm")),
    };
    Ok(match cli.seed {
        Some(s) => cfg.seed(s),
        None => cfg,
    })
}

/// Parses `max_train`, `max_train:<margin>` or `contamination:<ratio>`.
pub fn parse_threshold(text: &str) -> CliResult<ThresholdRule> {
    let (name, arg) = match text.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (text.trim(), None),
    };
    let num = |a: &str| {
        a.parse::<f64>()
            .map_err(|_| invalid(format!("field 'threshold': '{a}' is not a number")))
    };
    let rule = match (name, arg) {
        ("max_train", None) => ThresholdRule::max_train(),
        ("max_train", Some(a)) => ThresholdRule::MaxTrain { margin: num(a)? },
        ("contamination", Some(a)) => ThresholdRule::contamination(num(a)?),
        _ => {
            return Err(invalid(format!(
                "field 'threshold': expected max_train, max_train:<margin> or contamination:<ratio>, got '{text}'"
            )))
        }
    };
    rule.validate()?;
    Ok(rule)
}

pub fn parse_mode(text: &str, spec: &FeatureSpec) -> CliResult<DiagnosisMode> {
    let mode = match text.trim() {
        "auto" => DiagnosisMode::for_spec(spec),
        "classification" | "unsupervised_classification" => DiagnosisMode::UnsupervisedClassification,
        "root_cause" | "root_cause_analysis" => DiagnosisMode::RootCauseAnalysis,
        other => {
            return Err(invalid(format!(
                "field 'mode': expected auto, classification or root_cause, got '{other}'"
            )))
        }
    };
    Ok(mode.validate(spec)?)
}

/// An explainer given by name or as a full JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExplainerChoice {
    Name(String),
    Full(Explainer),
}

impl Default for ExplainerChoice {
    fn default() -> Self {
        ExplainerChoice::Name("auto".into())
    }
}

/// `auto` picks Local-DIFFI for isolation forests and Shapley otherwise. A seed, when
/// given, replaces the Shapley sampling seed.
pub fn resolve_explainer(choice: &ExplainerChoice, model: &FittedDetector, seed: Option<u64>) -> CliResult<Explainer> {
    let mut e = match choice {
        ExplainerChoice::Full(e) => e.clone(),
        ExplainerChoice::Name(n) => match n.trim() {
            "auto" if model.forest().is_some() => Explainer::LocalDiffi,
            "auto" | "shapley" => Explainer::Shapley(ShapleyConfig::default()),
            "local_diffi" | "local-diffi" | "diffi" => Explainer::LocalDiffi,
            other => {
                return Err(invalid(format!(
                    "field 'explainer': expected auto, local_diffi or shapley, got '{other}'"
                )))
            }
        },
    };
    if let (Explainer::Shapley(cfg), Some(s)) = (&mut e, seed) {
        cfg.seed = s;
    }
    if e.method() == ExplainMethod::LocalDiffi && model.forest().is_none() {
        return Err(Error::WrongAlgorithm(format!(
            "field 'explainer': Local-DIFFI needs an isolation forest, the model is {}",
            model.algorithm()
        ))
        .into());
    }
    Ok(e)
}

/// One line of a score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub index: usize,
    pub score: f64,
    pub normalized_score: f64,
    pub threshold: f64,
    pub is_anomaly: bool,
    pub label: Option<bool>,
}

fn score_rows(model: &FittedDetector, table: &FeatureTable, rows: &[usize], thr: f64) -> CliResult<Vec<ScoreRow>> {
    table.check_matches(model.feature_names())?;
    rows.iter()
        .map(|&i| {
            let d = model.decide(model.score_values(&table.rows()[i])?, thr);
            Ok(ScoreRow {
                index: i,
                score: d.score,
                normalized_score: d.normalized_score,
                threshold: thr,
                is_anomaly: d.is_anomaly,
                label: table.labels().map(|l| l[i]),
            })
        })
        .collect()
}

fn diagnose_rows(
    model: &FittedDetector,
    table: &FeatureTable,
    rows: &[usize],
    spec: &FeatureSpec,
    mode: DiagnosisMode,
    explainer: &Explainer,
    thr: f64,
) -> CliResult<Vec<DiagnosisReport>> {
    table.check_matches(model.feature_names())?;
    let reports: vibro_ad::Result<Vec<DiagnosisReport>> = rows
        .par_iter()
        .map(|&i| {
            let mut r = diagnose(model, &table.row(i), spec, mode, explainer, thr, false)?;
            r.sample_ref = Some(format!("row {i}"));
            Ok(r)
        })
        .collect();
    Ok(reports?)
}

fn extract_dir(dir: &Path, spec: &FeatureSpec, sample_rate: Option<f64>) -> CliResult<FeatureTable> {
    if !dir.is_dir() {
        return Err(Error::NoInputs(format!("{} is not a directory", dir.display())).into());
    }
    let files = io::list_signal_files(dir)?;
    let vectors: vibro_ad::Result<Vec<_>> = files
        .par_iter()
        .map(|f| extract(&io::read_signal(f, sample_rate)?, spec))
        .collect();
    Ok(FeatureTable::from_vectors(&vectors?, None)?)
}

fn default_threshold() -> ThresholdRule {
    ThresholdRule::max_train()
}

fn default_mode() -> String {
    "auto".into()
}

/// Everything `run` needs. Relative paths are resolved against the manifest's folder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Feature table CSVs, or directories of signal files to extract.
    pub inputs: Vec<PathBuf>,
    /// Feature spec JSON.
    pub spec: PathBuf,
    /// Detector config JSON.
    pub detector: PathBuf,
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default)]
    pub explainer: ExplainerChoice,
    #[serde(default = "default_threshold")]
    pub threshold: ThresholdRule,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Leading rows used for training. Defaults to the rows before the first labeled
    /// anomaly.
    #[serde(default)]
    pub train_rows: Option<usize>,
    /// Sample rate for headerless CSV signals.
    #[serde(default)]
    pub sample_rate: Option<f64>,
}

impl RunManifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = read_text(path, "manifest")?;
        let mut m: RunManifest =
            serde_json::from_str(&text).map_err(|e| invalid(format!("manifest {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.inputs.iter_mut().for_each(resolve);
        resolve(&mut m.spec);
        resolve(&mut m.detector);
        resolve(&mut m.out_dir);
        Ok(m)
    }

    /// Checks that every referenced path exists.
    pub fn validate(&self) -> CliResult<()> {
        if self.inputs.is_empty() {
            return Err(Error::NoInputs("field 'inputs' is empty".into()).into());
        }
        for (i, p) in self.inputs.iter().enumerate() {
            if !p.exists() {
                return Err(invalid(format!("field 'inputs[{i}]': {} does not exist", p.display())));
            }
        }
        for (field, p) in [("spec", &self.spec), ("detector", &self.detector)] {
            if !p.is_file() {
                return Err(invalid(format!("field '{field}': {} is not a file", p.display())));
            }
        }
        self.threshold.validate()?;
        Ok(())
    }
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub algorithm: String,
    pub seed: u64,
    pub threshold_rule: ThresholdRule,
    pub threshold: f64,
    pub mode: DiagnosisMode,
    pub explainer: ExplainMethod,
    pub n_train: usize,
    pub n_test: usize,
    pub n_flagged: usize,
    /// Flagged samples per diagnosed fault label.
    pub fault_counts: BTreeMap<String, usize>,
    /// Flagged samples per top-ranked specific feature.
    pub top_feature_counts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr_auc: Option<f64>,
    /// Test rows between the first labeled anomaly and the first flag at or after it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_delay: Option<usize>,
}

/// One bar of an importance plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub index: usize,
    pub rank: usize,
    pub feature: String,
    pub weight: f64,
}

fn load_inputs(m: &RunManifest, spec: &FeatureSpec) -> CliResult<FeatureTable> {
    let names = spec.names();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut all_labeled = true;
    for p in &m.inputs {
        let t = if p.is_dir() {
            extract_dir(p, spec, m.sample_rate)?
        } else {
            io::load_table(p)?
        };
        t.check_matches(&names)?;
        match t.labels() {
            Some(l) => labels.extend_from_slice(l),
            None => all_labeled = false,
        }
        rows.extend_from_slice(t.rows());
    }
    Ok(FeatureTable::new(names, rows, all_labeled.then_some(labels))?)
}

/// Fits on the leading rows, then scores and diagnoses every remaining row.
pub fn run_manifest(m: &RunManifest, cli: &Cli) -> CliResult<()> {
    m.validate()?;
    let out_dir = cli.out.clone().unwrap_or_else(|| m.out_dir.clone());
    fs::create_dir_all(&out_dir)
        .map_err(|e| invalid(format!("field 'out_dir': cannot create {}: {e}", out_dir.display())))?;
    let seed = cli.seed.or(m.seed);
    let spec = load_spec(&m.spec)?;
    let detector_path = cli.config.as_deref().unwrap_or(&m.detector);
    let mut cfg = DetectorConfig::from_json(&read_text(detector_path, "detector")?)?;
    if let Some(s) = seed {
        cfg = cfg.seed(s);
    }
    let mode = parse_mode(&m.mode, &spec)?;
    let table = load_inputs(m, &spec)?;
    let n_train = match (m.train_rows, table.labels()) {
        (Some(n), _) => n,
        (None, Some(l)) => l.iter().position(|a| *a).unwrap_or(l.len()),
        (None, None) => return Err(invalid("field 'train_rows' is required when inputs carry no labels")),
    };
    if n_train < cfg.min_rows() || n_train >= table.n_rows() {
        return Err(Error::InsufficientData(format!(
            "{n_train} training rows out of {}: need at least {} for training and one left for testing",
            table.n_rows(),
            cfg.min_rows()
        ))
        .into());
    }
    let train: Vec<usize> = (0..n_train).collect();
    let test: Vec<usize> = (n_train..table.n_rows()).collect();
    let model = fit(&cfg, &table.select(&train).without_labels())?;
    let explainer = resolve_explainer(&m.explainer, &model, seed)?;
    let thr = model.threshold(&m.threshold)?;

    let scores = score_rows(&model, &table, &test, thr)?;
    let reports = diagnose_rows(&model, &table, &test, &spec, mode, &explainer, thr)?;
    let mut importance = Vec::new();
    let mut fault_counts = BTreeMap::new();
    let mut top_feature_counts = BTreeMap::new();
    for (r, &i) in reports.iter().zip(&test) {
        if let Some(label) = &r.fault_label {
            *fault_counts.entry(label.clone()).or_insert(0) += 1;
        }
        if let Some(ranking) = &r.filtered_ranking {
            if let Some(top) = ranking.top() {
                *top_feature_counts.entry(top.to_string()).or_insert(0) += 1;
            }
            importance.extend(ranking.entries.iter().enumerate().map(|(rank, e)| ImportanceRow {
                index: i,
                rank: rank + 1,
                feature: e.feature.clone(),
                weight: e.weight,
            }));
        }
    }
    let pred: Vec<bool> = scores.iter().map(|s| s.is_anomaly).collect();
    let mut metrics = RunMetrics {
        algorithm: model.algorithm().to_string(),
        seed: cfg.seed,
        threshold_rule: m.threshold,
        threshold: thr,
        mode,
        explainer: explainer.method(),
        n_train,
        n_test: test.len(),
        n_flagged: pred.iter().filter(|p| **p).count(),
        fault_counts,
        top_feature_counts,
        confusion: None,
        f1: None,
        pr_auc: None,
        detection_delay: None,
    };
    if let Some(labels) = table.labels() {
        let truth: Vec<bool> = test.iter().map(|&i| labels[i]).collect();
        let cm = confusion_matrix(&pred, &truth)?;
        metrics.f1 = Some(f1_score(&cm));
        metrics.confusion = Some(cm);
        let raw: Vec<f64> = scores.iter().map(|s| s.score).collect();
        metrics.pr_auc = pr_auc(&raw, &truth).ok();
        metrics.detection_delay = truth
            .iter()
            .position(|t| *t)
            .and_then(|onset| pred[onset..].iter().position(|p| *p));
    }

    let mut buf = Vec::new();
    io::write_records(&mut buf, &scores)?;
    fs::write(out_dir.join("anomaly_scores.csv"), buf)?;
    let mut buf = Vec::new();
    io::write_jsonl(&mut buf, &reports)?;
    fs::write(out_dir.join("reports.jsonl"), buf)?;
    let mut buf = Vec::new();
    io::write_records(&mut buf, &importance)?;
    if importance.is_empty() {
        buf = b"index,rank,feature,weight\n".to_vec();
    }
    fs::write(out_dir.join("importance.csv"), buf)?;
    fs::write(
        out_dir.join("metrics.json"),
        serde_json::to_string_pretty(&metrics).expect("metrics serialize") + "\n",
    )?;
    Ok(())
}
