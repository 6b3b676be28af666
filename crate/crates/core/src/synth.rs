//! Synthetic vibration signals with known faults, and labeled datasets built from them.
//!
//! Every signal is Gaussian noise plus a weak tone at the shaft frequency. Faults add
//! components whose amplitude is proportional to the severity:
//!
//! * bearing faults: a train of impacts at the defect rate, each ringing a damped
//!   resonance; impact times jitter by 1 % of the period;
//! * gear faults: a tone at the mesh frequency with sidebands at +/- the shaft frequency;
//! * unbalance: a tone at 1x the shaft frequency;
//! * misalignment: tones at 2x and 3x;
//! * looseness: tones at 1x..4x plus a 0.5x subharmonic.

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::presets::{self, BearingFrequencies};
use crate::features::{extract, FeatureSpec, FeatureTable};
use crate::signal::VibrationSignal;

/// Amplitude of the healthy shaft tone, relative to one unit of noise.
const SHAFT_TONE: f64 = 0.2;
/// Peak amplitude of a single bearing impact at severity 1.
const IMPACT_AMP: f64 = 8.0;
/// Damping ratio of the excited resonance.
const DAMPING: f64 = 0.25;
/// Standard deviation of impact timing, as a fraction of the defect period.
const JITTER: f64 = 0.01;
const GEAR_AMP: f64 = 1.0;
const SIDEBAND_RATIO: f64 = 0.5;
const UNBALANCE_AMP: f64 = 1.0;
const MISALIGN_AMP: [f64; 2] = [1.0, 0.7];
const LOOSENESS_AMP: [f64; 4] = [0.6, 0.6, 0.5, 0.4];
const SUBHARMONIC_AMP: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fault {
    None,
    OuterRace,
    InnerRace,
    Ball,
    GearStage1,
    GearStage2,
    Unbalance,
    Misalignment,
    Looseness,
    Combined(Vec<Fault>),
}

impl Fault {
    pub fn name(&self) -> String {
        match self {
            Fault::None => "none".into(),
            Fault::OuterRace => "outer_race".into(),
            Fault::InnerRace => "inner_race".into(),
            Fault::Ball => "ball".into(),
            Fault::GearStage1 => "gear_stage1".into(),
            Fault::GearStage2 => "gear_stage2".into(),
            Fault::Unbalance => "unbalance".into(),
            Fault::Misalignment => "misalignment".into(),
            Fault::Looseness => "looseness".into(),
            Fault::Combined(parts) => parts.iter().map(Fault::name).collect::<Vec<_>>().join("+"),
        }
    }

    /// The label the preset feature specs attach to features that reveal this fault.
    pub fn diagnosis_label(&self) -> Option<&'static str> {
        match self {
            Fault::OuterRace => Some("outer race"),
            Fault::InnerRace => Some("inner race"),
            Fault::Ball => Some("ball"),
            Fault::GearStage1 => Some("1st stage"),
            Fault::GearStage2 => Some("2nd stage"),
            Fault::Unbalance => Some("unbalance"),
            Fault::Misalignment => Some("misalignment"),
            Fault::Looseness => Some("looseness"),
            Fault::None | Fault::Combined(_) => None,
        }
    }

    pub fn is_none(&self) -> bool {
        match self {
            Fault::None => true,
            Fault::Combined(parts) => parts.iter().all(Fault::is_none),
            _ => false,
        }
    }

    fn leaves(&self) -> Vec<&Fault> {
        match self {
            Fault::Combined(parts) => parts.iter().flat_map(Fault::leaves).collect(),
            f => vec![f],
        }
    }
}

/// Characteristic frequencies of the simulated machine, in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Machine {
    pub fr_hz: f64,
    pub bpfo_hz: f64,
    pub bpfi_hz: f64,
    pub bsf_hz: f64,
    pub gmf1_hz: f64,
    pub gmf2_hz: f64,
    pub resonance_hz: f64,
}

impl Default for Machine {
    fn default() -> Self {
        Self::bearing_rig()
    }
}

impl Machine {
    /// A double-row bearing on a 2000 rpm shaft.
    pub fn bearing_rig() -> Self {
        Self {
            fr_hz: 33.33,
            bpfo_hz: 236.4,
            bpfi_hz: 296.9,
            bsf_hz: 139.9,
            gmf1_hz: 32.0 * 33.33,
            gmf2_hz: 48.0 * 33.33 * 32.0 / 80.0,
            resonance_hz: 3000.0,
        }
    }

    /// Two-stage gearbox: 32/80 teeth on the first stage, 48/64 on the second.
    pub fn gearbox_rig() -> Self {
        Self {
            fr_hz: 25.0,
            gmf1_hz: 800.0,
            gmf2_hz: 480.0,
            ..Self::bearing_rig()
        }
    }

    /// Motor-driven rotor at 1717.5 rpm.
    pub fn rotor_rig() -> Self {
        Self {
            fr_hz: 28.625,
            ..Self::bearing_rig()
        }
    }

    pub fn bearing_frequencies(&self, envelope_band: (f64, f64)) -> BearingFrequencies {
        BearingFrequencies {
            bpfo_hz: self.bpfo_hz,
            bpfi_hz: self.bpfi_hz,
            bsf_hz: self.bsf_hz,
            envelope_band,
        }
    }

    fn all(&self) -> [(&'static str, f64); 7] {
        [
            ("fr_hz", self.fr_hz),
            ("bpfo_hz", self.bpfo_hz),
            ("bpfi_hz", self.bpfi_hz),
            ("bsf_hz", self.bsf_hz),
            ("gmf1_hz", self.gmf1_hz),
            ("gmf2_hz", self.gmf2_hz),
            ("resonance_hz", self.resonance_hz),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthFaultSpec {
    pub fault: Fault,
    pub severity: f64,
    pub machine: Machine,
    pub noise_rms: f64,
    pub seed: u64,
}

impl SynthFaultSpec {
    pub fn new(fault: Fault, severity: f64, seed: u64) -> Self {
        Self {
            fault,
            severity,
            machine: Machine::default(),
            noise_rms: 1.0,
            seed,
        }
    }

    /// Checks the spec against a sample rate. Only the frequencies the fault actually
    /// uses (plus the shaft frequency) must lie below Nyquist.
    pub fn validate(&self, sample_rate: f64) -> Result<()> {
        if !(self.severity >= 0.0 && self.severity.is_finite()) {
            return Err(Error::InvalidSpec(format!("severity must be >= 0, got {}", self.severity)));
        }
        if !(self.noise_rms > 0.0 && self.noise_rms.is_finite()) {
            return Err(Error::InvalidSpec(format!("noise_rms must be > 0, got {}", self.noise_rms)));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidSpec(format!("sample rate must be > 0, got {sample_rate}")));
        }
        for (name, f) in self.machine.all() {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::InvalidSpec(format!("{name} must be positive, got {f}")));
            }
        }
        let nyquist = sample_rate / 2.0;
        for (name, f) in self.used_frequencies() {
            if f >= nyquist {
                return Err(Error::InvalidSpec(format!(
                    "{name} = {f} Hz is not below Nyquist ({nyquist} Hz)"
                )));
            }
        }
        Ok(())
    }

    fn used_frequencies(&self) -> Vec<(&'static str, f64)> {
        let m = &self.machine;
        let mut out = vec![("fr_hz", m.fr_hz)];
        for leaf in self.fault.leaves() {
            match leaf {
                Fault::OuterRace => out.extend([("bpfo_hz", m.bpfo_hz), ("resonance_hz", m.resonance_hz)]),
                Fault::InnerRace => out.extend([("bpfi_hz", m.bpfi_hz), ("resonance_hz", m.resonance_hz)]),
                Fault::Ball => out.extend([("bsf_hz", m.bsf_hz), ("resonance_hz", m.resonance_hz)]),
                Fault::GearStage1 => out.push(("gmf1_hz + fr_hz", m.gmf1_hz + m.fr_hz)),
                Fault::GearStage2 => out.push(("gmf2_hz + fr_hz", m.gmf2_hz + m.fr_hz)),
                Fault::Misalignment => out.push(("3 x fr_hz", 3.0 * m.fr_hz)),
                Fault::Looseness => out.push(("4 x fr_hz", 4.0 * m.fr_hz)),
                Fault::None | Fault::Unbalance | Fault::Combined(_) => {}
            }
        }
        out
    }
}

fn add_tone(x: &mut [f64], fs: f64, freq: f64, amp: f64, rng: &mut ChaCha8Rng) {
    let phase = rng.random::<f64>() * 2.0 * PI;
    let w = 2.0 * PI * freq / fs;
    for (i, v) in x.iter_mut().enumerate() {
        *v += amp * (w * i as f64 + phase).sin();
    }
}

fn add_impacts(x: &mut [f64], fs: f64, rate_hz: f64, resonance_hz: f64, amp: f64, rng: &mut ChaCha8Rng) {
    let period = 1.0 / rate_hz;
    let tau = 1.0 / (2.0 * PI * resonance_hz * DAMPING);
    let ring = (8.0 * tau * fs).ceil() as usize;
    let w = 2.0 * PI * resonance_hz / fs;
    let decay = (-1.0 / (tau * fs)).exp();
    let duration = x.len() as f64 / fs;
    let jitter = Normal::new(0.0, JITTER * period).expect("positive std");
    let start = rng.random::<f64>() * period;
    let mut k = 0usize;
    loop {
        let t = start + k as f64 * period + jitter.sample(rng);
        if t >= duration {
            break;
        }
        k += 1;
        if t < 0.0 {
            continue;
        }
        let t0 = t * fs;
        let first = t0.ceil() as usize;
        let mut env = amp * decay.powf(first as f64 - t0);
        for i in first..(first + ring).min(x.len()) {
            x[i] += env * (w * (i as f64 - t0)).sin();
            env *= decay;
        }
    }
}

fn add_fault(x: &mut [f64], fs: f64, fault: &Fault, sev: f64, m: &Machine, rng: &mut ChaCha8Rng) {
    if sev == 0.0 {
        return;
    }
    match fault {
        Fault::None => {}
        Fault::OuterRace => add_impacts(x, fs, m.bpfo_hz, m.resonance_hz, IMPACT_AMP * sev, rng),
        Fault::InnerRace => add_impacts(x, fs, m.bpfi_hz, m.resonance_hz, IMPACT_AMP * sev, rng),
        Fault::Ball => add_impacts(x, fs, m.bsf_hz, m.resonance_hz, IMPACT_AMP * sev, rng),
        Fault::GearStage1 | Fault::GearStage2 => {
            let gmf = if *fault == Fault::GearStage1 { m.gmf1_hz } else { m.gmf2_hz };
            add_tone(x, fs, gmf, GEAR_AMP * sev, rng);
            add_tone(x, fs, gmf - m.fr_hz, SIDEBAND_RATIO * GEAR_AMP * sev, rng);
            add_tone(x, fs, gmf + m.fr_hz, SIDEBAND_RATIO * GEAR_AMP * sev, rng);
        }
        Fault::Unbalance => add_tone(x, fs, m.fr_hz, UNBALANCE_AMP * sev, rng),
        Fault::Misalignment => {
            add_tone(x, fs, 2.0 * m.fr_hz, MISALIGN_AMP[0] * sev, rng);
            add_tone(x, fs, 3.0 * m.fr_hz, MISALIGN_AMP[1] * sev, rng);
        }
        Fault::Looseness => {
            for (h, a) in LOOSENESS_AMP.iter().enumerate() {
                add_tone(x, fs, (h + 1) as f64 * m.fr_hz, a * sev, rng);
            }
            add_tone(x, fs, 0.5 * m.fr_hz, SUBHARMONIC_AMP * sev, rng);
        }
        Fault::Combined(parts) => {
            for p in parts {
                add_fault(x, fs, p, sev, m, rng);
            }
        }
    }
}

/// Generates one signal. Output depends only on the spec, the length and the rate.
pub fn generate(spec: &SynthFaultSpec, n_samples: usize, sample_rate: f64) -> Result<VibrationSignal> {
    spec.validate(sample_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut x: Vec<f64> = (0..n_samples)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            spec.noise_rms * z
        })
        .collect();
    add_tone(&mut x, sample_rate, spec.machine.fr_hz, SHAFT_TONE * spec.noise_rms, &mut rng);
    add_fault(&mut x, sample_rate, &spec.fault, spec.severity, &spec.machine, &mut rng);
    Ok(VibrationSignal::new(x, sample_rate)?
        .with_meta("fault", spec.fault.name())
        .with_meta("severity", spec.severity.to_string())
        .with_meta("seed", spec.seed.to_string()))
}

/// Shape of a generated dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaseStyle {
    BearingRunToFailure,
    GearboxStatic,
    MechanicalStatic,
}

/// Ordered bearing stream: healthy rows, then a fault whose severity grows linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BearingStreamParams {
    pub n_rows: usize,
    /// Index of the first faulty row.
    pub onset: usize,
    /// Severity added per row after the onset; the onset row has severity `ramp_per_row`.
    pub ramp_per_row: f64,
    pub max_severity: f64,
    pub fault: Fault,
    pub machine: Machine,
    pub noise_rms: f64,
    pub n_samples: usize,
    pub sample_rate: f64,
    pub envelope_band: (f64, f64),
    pub seed: u64,
}

impl Default for BearingStreamParams {
    fn default() -> Self {
        Self {
            n_rows: 700,
            onset: 500,
            ramp_per_row: 0.1,
            max_severity: 2.0,
            fault: Fault::OuterRace,
            machine: Machine::bearing_rig(),
            noise_rms: 1.0,
            n_samples: 4096,
            sample_rate: 20480.0,
            envelope_band: (2000.0, 4000.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassCount {
    pub fault: Fault,
    pub count: usize,
}

/// Shuffled labeled rows; faulty rows draw their severity uniformly from `severity_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StaticParams {
    pub classes: Vec<ClassCount>,
    pub severity_range: (f64, f64),
    pub machine: Machine,
    pub noise_rms: f64,
    pub n_samples: usize,
    pub sample_rate: f64,
    pub seed: u64,
}

impl StaticParams {
    /// Healthy, first-stage and second-stage gear faults, 104 rows each.
    pub fn gearbox() -> Self {
        Self {
            classes: vec![
                ClassCount { fault: Fault::None, count: 104 },
                ClassCount { fault: Fault::GearStage1, count: 104 },
                ClassCount { fault: Fault::GearStage2, count: 104 },
            ],
            severity_range: (0.5, 1.5),
            machine: Machine::gearbox_rig(),
            noise_rms: 1.0,
            n_samples: 4000,
            sample_rate: 20000.0,
            seed: 0,
        }
    }

    /// Healthy rows plus unbalance and misalignment.
    pub fn mechanical() -> Self {
        Self {
            classes: vec![
                ClassCount { fault: Fault::None, count: 200 },
                ClassCount { fault: Fault::Unbalance, count: 50 },
                ClassCount { fault: Fault::Misalignment, count: 50 },
            ],
            severity_range: (0.5, 1.5),
            machine: Machine::rotor_rig(),
            noise_rms: 1.0,
            n_samples: 3200,
            sample_rate: 400.0,
            seed: 0,
        }
    }
}

/// Dataset request; `case_style` picks the variant in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case_style", rename_all = "snake_case")]
pub enum DatasetParams {
    BearingRunToFailure(BearingStreamParams),
    GearboxStatic(StaticParams),
    MechanicalStatic(StaticParams),
}

impl DatasetParams {
    pub fn default_for(style: CaseStyle) -> Self {
        match style {
            CaseStyle::BearingRunToFailure => Self::BearingRunToFailure(BearingStreamParams::default()),
            CaseStyle::GearboxStatic => Self::GearboxStatic(StaticParams::gearbox()),
            CaseStyle::MechanicalStatic => Self::MechanicalStatic(StaticParams::mechanical()),
        }
    }

    pub fn style(&self) -> CaseStyle {
        match self {
            Self::BearingRunToFailure(_) => CaseStyle::BearingRunToFailure,
            Self::GearboxStatic(_) => CaseStyle::GearboxStatic,
            Self::MechanicalStatic(_) => CaseStyle::MechanicalStatic,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Self::BearingRunToFailure(p) => p.seed,
            Self::GearboxStatic(p) | Self::MechanicalStatic(p) => p.seed,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            Self::BearingRunToFailure(p) => p.seed = seed,
            Self::GearboxStatic(p) | Self::MechanicalStatic(p) => p.seed = seed,
        }
        self
    }

    /// Parses a JSON object naming a `case_style`; fields it leaves out take the defaults
    /// of that style.
    pub fn from_json(text: &str) -> Result<Self> {
        let bad = |msg: String| Error::InvalidConfig(format!("dataset params: {msg}"));
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        let obj = value.as_object().ok_or_else(|| bad("expected a JSON object".into()))?;
        let style: CaseStyle = serde_json::from_value(
            obj.get("case_style")
                .cloned()
                .ok_or_else(|| bad("field 'case_style' is missing".into()))?,
        )
        .map_err(|e| bad(format!("field 'case_style': {e}")))?;
        let mut merged = serde_json::to_value(Self::default_for(style))?;
        let target = merged.as_object_mut().expect("params serialize to an object");
        for (k, v) in obj {
            target.insert(k.clone(), v.clone());
        }
        serde_json::from_value(merged).map_err(|e| bad(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }

    /// Feature spec the dataset is extracted with.
    pub fn feature_spec(&self) -> FeatureSpec {
        match self {
            Self::BearingRunToFailure(p) => presets::bearing(&p.machine.bearing_frequencies(p.envelope_band)),
            Self::GearboxStatic(p) => presets::gearbox(p.machine.fr_hz, p.machine.gmf1_hz, p.machine.gmf2_hz),
            Self::MechanicalStatic(p) => presets::mechanical(p.machine.fr_hz),
        }
    }
}

/// What was generated for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub case_style: CaseStyle,
    pub seed: u64,
    /// First faulty row of an ordered stream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
    pub faults: Vec<String>,
    pub severities: Vec<f64>,
    pub signal_seeds: Vec<u64>,
    pub params: DatasetParams,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub table: FeatureTable,
    pub spec: FeatureSpec,
    pub truth: GroundTruth,
}

/// Per-row signal seed: a fixed mix of the dataset seed and the row index.
fn row_seed(seed: u64, row: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64 + 1);
    rng.random()
}

struct RowPlan {
    fault: Fault,
    severity: f64,
    seed: u64,
}

fn extract_rows(
    plans: &[RowPlan],
    machine: &Machine,
    noise_rms: f64,
    n_samples: usize,
    sample_rate: f64,
    spec: &FeatureSpec,
) -> Result<Vec<Vec<f64>>> {
    plans
        .par_iter()
        .map(|p| {
            let s = SynthFaultSpec {
                fault: p.fault.clone(),
                severity: p.severity,
                machine: *machine,
                noise_rms,
                seed: p.seed,
            };
            Ok(extract(&generate(&s, n_samples, sample_rate)?, spec)?.values)
        })
        .collect()
}

fn check_common(noise_rms: f64, n_samples: usize, sample_rate: f64) -> Result<()> {
    if n_samples < 64 {
        return Err(Error::InvalidConfig(format!("n_samples must be at least 64, got {n_samples}")));
    }
    if !(noise_rms > 0.0) || !(sample_rate > 0.0) {
        return Err(Error::InvalidConfig("noise_rms and sample_rate must be positive".into()));
    }
    Ok(())
}

pub fn generate_dataset(params: &DatasetParams) -> Result<SynthDataset> {
    let spec = params.feature_spec();
    match params {
        DatasetParams::BearingRunToFailure(p) => {
            check_common(p.noise_rms, p.n_samples, p.sample_rate)?;
            if p.onset > p.n_rows || p.n_rows == 0 {
                return Err(Error::InvalidConfig(format!(
                    "onset {} must not exceed n_rows {} (> 0)",
                    p.onset, p.n_rows
                )));
            }
            if !(p.ramp_per_row > 0.0 && p.max_severity > 0.0) {
                return Err(Error::InvalidConfig("ramp_per_row and max_severity must be positive".into()));
            }
            if p.fault.is_none() {
                return Err(Error::InvalidConfig("a run-to-failure stream needs a fault".into()));
            }
            let plans: Vec<RowPlan> = (0..p.n_rows)
                .map(|i| {
                    let severity = if i < p.onset {
                        0.0
                    } else {
                        (p.ramp_per_row * (i - p.onset + 1) as f64).min(p.max_severity)
                    };
                    RowPlan {
                        fault: if i < p.onset { Fault::None } else { p.fault.clone() },
                        severity,
                        seed: row_seed(p.seed, i),
                    }
                })
                .collect();
            let rows = extract_rows(&plans, &p.machine, p.noise_rms, p.n_samples, p.sample_rate, &spec)?;
            let labels = (0..p.n_rows).map(|i| i >= p.onset).collect();
            finish(params, spec, rows, labels, plans, Some(p.onset))
        }
        DatasetParams::GearboxStatic(p) | DatasetParams::MechanicalStatic(p) => {
            check_common(p.noise_rms, p.n_samples, p.sample_rate)?;
            let (lo, hi) = p.severity_range;
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "severity_range ({lo}, {hi}) must satisfy 0 < lo <= hi"
                )));
            }
            if p.classes.iter().all(|c| c.count == 0) {
                return Err(Error::InvalidConfig("class counts are all zero".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let mut classes: Vec<(Fault, f64)> = Vec::new();
            for c in &p.classes {
                for _ in 0..c.count {
                    let sev = if c.fault.is_none() { 0.0 } else { rng.random_range(lo..=hi) };
                    classes.push((c.fault.clone(), sev));
                }
            }
            classes.shuffle(&mut rng);
            let plans: Vec<RowPlan> = classes
                .into_iter()
                .enumerate()
                .map(|(i, (fault, severity))| RowPlan {
                    fault,
                    severity,
                    seed: row_seed(p.seed, i),
                })
                .collect();
            let rows = extract_rows(&plans, &p.machine, p.noise_rms, p.n_samples, p.sample_rate, &spec)?;
            let labels = plans.iter().map(|r| !r.fault.is_none()).collect();
            finish(params, spec, rows, labels, plans, None)
        }
    }
}

fn finish(
    params: &DatasetParams,
    spec: FeatureSpec,
    rows: Vec<Vec<f64>>,
    labels: Vec<bool>,
    plans: Vec<RowPlan>,
    onset: Option<usize>,
) -> Result<SynthDataset> {
    let table = FeatureTable::new(spec.names(), rows, Some(labels))?;
    let truth = GroundTruth {
        case_style: params.style(),
        seed: params.seed(),
        onset,
        faults: plans.iter().map(|p| p.fault.name()).collect(),
        severities: plans.iter().map(|p| p.severity).collect(),
        signal_seeds: plans.iter().map(|p| p.seed).collect(),
        params: params.clone(),
    };
    Ok(SynthDataset { table, spec, truth })
}
