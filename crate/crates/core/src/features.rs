//! Feature specifications, extraction from vibration signals and tabular feature data.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{self, Spectrum, VibrationSignal, WindowKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tag {
    General,
    Specific,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Rms,
    Kurtosis,
}

/// Spectrum a band-energy feature is measured on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralBasis {
    #[default]
    Direct,
    Envelope { low_hz: f64, high_hz: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureKind {
    TimeStat {
        statistic: Statistic,
    },
    BandEnergy {
        center_hz: f64,
        /// When absent: envelope basis uses +/-2 % of the center rounded up to whole
        /// bins (at least 2 bins), direct basis uses 4 bins.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        half_width_hz: Option<f64>,
        #[serde(default)]
        basis: SpectralBasis,
    },
}

/// One or several fault labels; a single string in JSON when there is exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FaultLabels {
    One(String),
    Many(Vec<String>),
}

impl FaultLabels {
    pub fn as_slice(&self) -> &[String] {
        match self {
            FaultLabels::One(s) => std::slice::from_ref(s),
            FaultLabels::Many(v) => v,
        }
    }

    /// The label when the feature points at exactly one fault.
    pub fn single(&self) -> Option<&str> {
        match self.as_slice() {
            [one] => Some(one),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureDef {
    pub name: String,
    #[serde(flatten)]
    pub kind: FeatureKind,
    pub tag: Tag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault_label: Option<FaultLabels>,
}

impl FeatureDef {
    pub fn time_stat(name: &str, statistic: Statistic) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::TimeStat { statistic },
            tag: Tag::General,
            fault_label: None,
        }
    }

    pub fn band(name: &str, center_hz: f64, half_width_hz: Option<f64>, basis: SpectralBasis) -> Self {
        Self {
            name: name.into(),
            kind: FeatureKind::BandEnergy {
                center_hz,
                half_width_hz,
                basis,
            },
            tag: Tag::General,
            fault_label: None,
        }
    }

    pub fn specific(mut self, labels: &[&str]) -> Self {
        self.tag = Tag::Specific;
        self.fault_label = Some(match labels {
            [one] => FaultLabels::One((*one).into()),
            many => FaultLabels::Many(many.iter().map(|s| (*s).into()).collect()),
        });
        self
    }
}

#[derive(Debug, Deserialize)]
struct RawSpec {
    features: Vec<FeatureDef>,
}

/// Ordered, validated list of feature definitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct FeatureSpec {
    features: Vec<FeatureDef>,
}

impl TryFrom<RawSpec> for FeatureSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        FeatureSpec::new(raw.features)
    }
}

impl FeatureSpec {
    pub fn new(features: Vec<FeatureDef>) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidSpec("spec declares no features".into()));
        }
        let mut seen = HashSet::new();
        for def in &features {
            if def.name.is_empty() || def.name == "label" || def.name.contains(',') {
                return Err(Error::InvalidSpec(format!("invalid feature name '{}'", def.name)));
            }
            if !seen.insert(def.name.as_str()) {
                return Err(Error::InvalidSpec(format!("duplicate feature name '{}'", def.name)));
            }
            match (def.tag, &def.fault_label) {
                (Tag::Specific, None) => {
                    return Err(Error::InvalidSpec(format!(
                        "specific feature '{}' has no fault_label",
                        def.name
                    )))
                }
                (Tag::Specific, Some(l)) if l.as_slice().is_empty() => {
                    return Err(Error::InvalidSpec(format!(
                        "specific feature '{}' has an empty fault_label",
                        def.name
                    )))
                }
                (Tag::General, Some(_)) => {
                    return Err(Error::InvalidSpec(format!(
                        "general feature '{}' must not carry a fault_label",
                        def.name
                    )))
                }
                _ => {}
            }
            if let FeatureKind::BandEnergy {
                center_hz,
                half_width_hz,
                basis,
            } = &def.kind
            {
                if !(center_hz.is_finite() && *center_hz >= 0.0) {
                    return Err(Error::InvalidSpec(format!("'{}': center_hz must be >= 0", def.name)));
                }
                if let Some(hw) = half_width_hz {
                    if !(hw.is_finite() && *hw > 0.0) {
                        return Err(Error::InvalidSpec(format!(
                            "'{}': half_width_hz must be > 0",
                            def.name
                        )));
                    }
                }
                if let SpectralBasis::Envelope { low_hz, high_hz } = basis {
                    if !(*low_hz >= 0.0 && low_hz < high_hz) {
                        return Err(Error::InvalidSpec(format!(
                            "'{}': envelope band must satisfy 0 <= low < high",
                            def.name
                        )));
                    }
                }
            }
        }
        Ok(Self { features })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feature spec serializes")
    }

    pub fn features(&self) -> &[FeatureDef] {
        &self.features
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(|f| f.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&FeatureDef> {
        self.features.iter().find(|f| f.name == name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn general(&self) -> impl Iterator<Item = &FeatureDef> {
        self.features.iter().filter(|f| f.tag == Tag::General)
    }

    pub fn specific(&self) -> impl Iterator<Item = &FeatureDef> {
        self.features.iter().filter(|f| f.tag == Tag::Specific)
    }

    pub fn is_specific(&self, name: &str) -> bool {
        self.get(name).is_some_and(|f| f.tag == Tag::Specific)
    }

    /// Fault label of a specific feature that points at a single fault.
    pub fn fault_label(&self, name: &str) -> Option<&str> {
        self.get(name)
            .and_then(|f| f.fault_label.as_ref())
            .and_then(FaultLabels::single)
    }

    /// True when every specific feature maps to exactly one fault label.
    pub fn has_single_fault_labels(&self) -> bool {
        self.specific().count() > 0
            && self
                .specific()
                .all(|f| f.fault_label.as_ref().and_then(FaultLabels::single).is_some())
    }
}

/// One observation's feature values, in spec order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub names: Vec<String>,
    pub values: Vec<f64>,
    /// Non-fatal notes raised during extraction, such as bands that matched no bins.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl FeatureVector {
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if names.len() != values.len() {
            return Err(Error::FeatureMismatch(format!(
                "{} names but {} values",
                names.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::FeatureMismatch(format!("value of '{}' is not finite", names[i])));
        }
        Ok(Self {
            names,
            values,
            warnings: Vec::new(),
        })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.values[i])
    }

    pub fn as_map(&self) -> BTreeMap<&str, f64> {
        self.names.iter().map(String::as_str).zip(self.values.iter().copied()).collect()
    }
}

pub fn rms(signal: &VibrationSignal) -> f64 {
    let x = signal.samples();
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// Population (non-excess) kurtosis `m4 / m2^2`; a Gaussian gives about 3.
pub fn kurtosis(signal: &VibrationSignal) -> Result<f64> {
    let x = signal.samples();
    if x.len() < 4 {
        return Err(Error::DegenerateSignal(format!(
            "kurtosis needs at least 4 samples, got {}",
            x.len()
        )));
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (m2, m4) = x.iter().fold((0.0, 0.0), |(m2, m4), v| {
        let d = (v - mean) * (v - mean);
        (m2 + d, m4 + d * d)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    if m2 == 0.0 || m2 <= 1e-24 * mean * mean {
        return Err(Error::DegenerateSignal("zero variance".into()));
    }
    Ok(m4 / (m2 * m2))
}

/// Window for band-energy features. Hann keeps leakage from a strong line out of
/// neighbouring bands.
pub const FEATURE_WINDOW: WindowKind = WindowKind::Hann;

/// Half-width used when a band-energy feature leaves it unspecified.
pub fn default_half_width(center_hz: f64, basis: &SpectralBasis, df: f64) -> f64 {
    match basis {
        SpectralBasis::Envelope { .. } => df * (0.02 * center_hz / df).ceil().max(2.0),
        SpectralBasis::Direct => 4.0 * df,
    }
}

/// Computes the feature vector of one signal.
pub fn extract(signal: &VibrationSignal, spec: &FeatureSpec) -> Result<FeatureVector> {
    let nyquist = signal.nyquist();
    for def in spec.features() {
        if let FeatureKind::BandEnergy {
            center_hz, basis, ..
        } = &def.kind
        {
            if *center_hz >= nyquist {
                return Err(Error::InvalidSpec(format!(
                    "'{}': band center {center_hz} Hz is not below Nyquist ({nyquist} Hz)",
                    def.name
                )));
            }
            if let SpectralBasis::Envelope { high_hz, .. } = basis {
                if *high_hz > nyquist {
                    return Err(Error::InvalidSpec(format!(
                        "'{}': envelope band upper edge {high_hz} Hz exceeds Nyquist",
                        def.name
                    )));
                }
            }
        }
    }

    let mut direct: Option<Spectrum> = None;
    let mut envelopes: Vec<((f64, f64), Spectrum)> = Vec::new();
    let mut values = Vec::with_capacity(spec.len());
    let mut warnings = Vec::new();
    for def in spec.features() {
        let v = match &def.kind {
            FeatureKind::TimeStat {
                statistic: Statistic::Rms,
            } => rms(signal),
            FeatureKind::TimeStat {
                statistic: Statistic::Kurtosis,
            } => kurtosis(signal)?,
            FeatureKind::BandEnergy {
                center_hz,
                half_width_hz,
                basis,
            } => {
                let spectrum = match basis {
                    SpectralBasis::Direct => {
                        if direct.is_none() {
                            direct = Some(signal::compute_spectrum(signal, FEATURE_WINDOW)?);
                        }
                        direct.as_ref().expect("set above")
                    }
                    SpectralBasis::Envelope { low_hz, high_hz } => {
                        let key = (*low_hz, *high_hz);
                        let pos = match envelopes.iter().position(|(k, _)| *k == key) {
                            Some(p) => p,
                            None => {
                                envelopes.push((key, signal::envelope_spectrum_with(signal, key, FEATURE_WINDOW)?));
                                envelopes.len() - 1
                            }
                        };
                        &envelopes[pos].1
                    }
                };
                let hw = half_width_hz
                    .unwrap_or_else(|| default_half_width(*center_hz, basis, spectrum.df()));
                if spectrum.band_bin_count(*center_hz, hw) == 0 {
                    warnings.push(format!("band for '{}' contains no bins", def.name));
                }
                spectrum.band_energy(*center_hz, hw)
            }
        };
        values.push(v);
    }
    let mut fv = FeatureVector::new(spec.names(), values)?;
    fv.warnings = warnings;
    Ok(fv)
}

/// Rows of feature vectors sharing one set of column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureTable {
    names: Vec<String>,
    rows: Vec<Vec<f64>>,
    /// `true` marks an anomaly; evaluation only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<bool>>,
}

impl FeatureTable {
    pub fn new(names: Vec<String>, rows: Vec<Vec<f64>>, labels: Option<Vec<bool>>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::FeatureMismatch("table has no columns".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != names.len() {
                return Err(Error::FeatureMismatch(format!(
                    "row {i} has {} values, expected {}",
                    r.len(),
                    names.len()
                )));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::FeatureMismatch(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != rows.len() {
                return Err(Error::FeatureMismatch(format!(
                    "{} labels for {} rows",
                    l.len(),
                    rows.len()
                )));
            }
        }
        Ok(Self { names, rows, labels })
    }

    pub fn from_vectors(vectors: &[FeatureVector], labels: Option<Vec<bool>>) -> Result<Self> {
        let names = vectors
            .first()
            .map(|v| v.names.clone())
            .ok_or_else(|| Error::InsufficientData("no feature vectors".into()))?;
        if let Some(v) = vectors.iter().find(|v| v.names != names) {
            return Err(Error::FeatureMismatch(format!(
                "vector columns {:?} differ from {:?}",
                v.names, names
            )));
        }
        Self::new(names, vectors.iter().map(|v| v.values.clone()).collect(), labels)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> FeatureVector {
        FeatureVector {
            names: self.names.clone(),
            values: self.rows[i].clone(),
            warnings: Vec::new(),
        }
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    /// New table made of the given rows (labels follow when present).
    pub fn select(&self, indices: &[usize]) -> FeatureTable {
        FeatureTable {
            names: self.names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i]).collect()),
        }
    }

    pub fn without_labels(&self) -> FeatureTable {
        FeatureTable {
            names: self.names.clone(),
            rows: self.rows.clone(),
            labels: None,
        }
    }

    pub fn check_matches(&self, names: &[String]) -> Result<()> {
        if self.names != names {
            return Err(Error::FeatureMismatch(format!(
                "table columns {:?} do not match {:?}",
                self.names, names
            )));
        }
        Ok(())
    }
}

/// Column statistics of a z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    /// Columns with zero spread in the training data: centered but not divided.
    pub zero_std: Vec<bool>,
}

impl ScalingParams {
    pub fn fit(train: &FeatureTable) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InsufficientData("cannot standardize an empty table".into()));
        }
        let n = train.n_rows() as f64;
        let p = train.n_features();
        let mut means = vec![0.0; p];
        for r in train.rows() {
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; p];
        for r in train.rows() {
            for j in 0..p {
                vars[j] += (r[j] - means[j]).powi(2);
            }
        }
        let stds: Vec<f64> = vars.iter().map(|v| (v / n).sqrt()).collect();
        let zero_std = stds
            .iter()
            .zip(&means)
            .map(|(s, m)| *s <= 1e-12 * m.abs().max(1.0))
            .collect();
        Ok(Self {
            means,
            stds,
            zero_std,
        })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(j, v)| {
                let c = v - self.means[j];
                if self.zero_std[j] {
                    c
                } else {
                    c / self.stds[j]
                }
            })
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, v)| {
                let s = if self.zero_std[j] { 1.0 } else { self.stds[j] };
                v * s + self.means[j]
            })
            .collect()
    }

    pub fn apply_table(&self, table: &FeatureTable) -> FeatureTable {
        FeatureTable {
            names: table.names.clone(),
            rows: table.rows.iter().map(|r| self.apply(r)).collect(),
            labels: table.labels.clone(),
        }
    }

    pub fn invert_table(&self, table: &FeatureTable) -> FeatureTable {
        FeatureTable {
            names: table.names.clone(),
            rows: table.rows.iter().map(|r| self.invert(r)).collect(),
            labels: table.labels.clone(),
        }
    }
}

/// Z-scores `apply_to` with the column statistics of `train`.
pub fn standardize(train: &FeatureTable, apply_to: &FeatureTable) -> Result<(FeatureTable, ScalingParams)> {
    apply_to.check_matches(train.names())?;
    let params = ScalingParams::fit(train)?;
    Ok((params.apply_table(apply_to), params))
}

/// Ready-made specs for the three machine types the pipeline was designed around.
pub mod presets {
    use super::*;

    /// Bearing characteristic frequencies plus the resonance band used for envelope analysis.
    #[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
    pub struct BearingFrequencies {
        pub bpfo_hz: f64,
        pub bpfi_hz: f64,
        pub bsf_hz: f64,
        pub envelope_band: (f64, f64),
    }

    /// kurtosis, rms (general) and BPFI, BPFO, BSF envelope band energies (specific).
    pub fn bearing(freqs: &BearingFrequencies) -> FeatureSpec {
        let basis = SpectralBasis::Envelope {
            low_hz: freqs.envelope_band.0,
            high_hz: freqs.envelope_band.1,
        };
        FeatureSpec::new(vec![
            FeatureDef::time_stat("kurtosis", Statistic::Kurtosis),
            FeatureDef::time_stat("rms", Statistic::Rms),
            FeatureDef::band("BPFI", freqs.bpfi_hz, None, basis).specific(&["inner race"]),
            FeatureDef::band("BPFO", freqs.bpfo_hz, None, basis).specific(&["outer race"]),
            FeatureDef::band("BSF", freqs.bsf_hz, None, basis).specific(&["ball"]),
        ])
        .expect("bearing preset is valid")
    }

    /// kurtosis, rms and GMF band energies (+/- 4 fr) for a two-stage gearbox.
    pub fn gearbox(fr_hz: f64, gmf1_hz: f64, gmf2_hz: f64) -> FeatureSpec {
        let hw = Some(4.0 * fr_hz);
        let mut defs = vec![
            FeatureDef::time_stat("kurtosis", Statistic::Kurtosis),
            FeatureDef::time_stat("rms", Statistic::Rms),
        ];
        for h in 1..=4 {
            defs.push(
                FeatureDef::band(&format!("{h}xGMF_1st"), h as f64 * gmf1_hz, hw, SpectralBasis::Direct)
                    .specific(&["1st stage"]),
            );
        }
        for h in 1..=2 {
            defs.push(
                FeatureDef::band(&format!("{h}xGMF_2nd"), h as f64 * gmf2_hz, hw, SpectralBasis::Direct)
                    .specific(&["2nd stage"]),
            );
        }
        FeatureSpec::new(defs).expect("gearbox preset is valid")
    }

    /// rms plus energy at 1x..4x the rotation frequency. Harmonics are shared by several
    /// faults, so this spec only supports root-cause analysis.
    pub fn mechanical(fr_hz: f64) -> FeatureSpec {
        let labels: [&[&str]; 4] = [
            &["unbalance", "looseness"],
            &["misalignment", "looseness"],
            &["misalignment", "looseness"],
            &["looseness"],
        ];
        let mut defs = vec![FeatureDef::time_stat("rms", Statistic::Rms)];
        for (h, l) in (1..=4).zip(labels) {
            defs.push(
                FeatureDef::band(&format!("{h}xfr"), h as f64 * fr_hz, None, SpectralBasis::Direct)
                    .specific(l),
            );
        }
        FeatureSpec::new(defs).expect("mechanical preset is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::f64::consts::PI;

    fn sig(x: Vec<f64>, fs: f64) -> VibrationSignal {
        VibrationSignal::new(x, fs).unwrap()
    }

    fn sine(n: usize, periods: usize) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * PI * periods as f64 * i as f64 / n as f64).sin())
            .collect()
    }

    #[test]
    fn rms_examples() {
        assert_abs_diff_eq!(rms(&sig(sine(1000, 10), 1000.0)), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-4);
        assert_abs_diff_eq!(rms(&sig(vec![3.0; 16], 1.0)), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rms(&sig(vec![1.0, -1.0, 1.0, -1.0], 1.0)), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn kurtosis_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let g: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        assert_abs_diff_eq!(kurtosis(&sig(g, 1.0)).unwrap(), 3.0, epsilon = 0.1);
        assert_abs_diff_eq!(
            kurtosis(&sig(vec![1.0, -1.0, 1.0, -1.0], 1.0)).unwrap(),
            1.0,
            epsilon = 1e-12
        );

        // numeric moment oracle for a dense sine
        let x = sine(100_000, 7);
        let m2 = x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64;
        let m4 = x.iter().map(|v| v.powi(4)).sum::<f64>() / x.len() as f64;
        assert_abs_diff_eq!(m4 / (m2 * m2), 1.5, epsilon = 0.01);
        assert_abs_diff_eq!(kurtosis(&sig(x, 1.0)).unwrap(), 1.5, epsilon = 0.01);

        assert!(matches!(
            kurtosis(&sig(vec![0.0; 64], 1.0)),
            Err(Error::DegenerateSignal(_))
        ));
        assert!(matches!(kurtosis(&sig(vec![1.0, 2.0, 3.0], 1.0)), Err(Error::DegenerateSignal(_))));
    }

    #[test]
    fn unbalance_tone_dominates_harmonics() {
        let fs = 400.0;
        let fr = 28.625;
        let x: Vec<f64> = (0..3200)
            .map(|i| (2.0 * PI * fr * i as f64 / fs).sin())
            .collect();
        let fv = extract(&sig(x, fs), &presets::mechanical(fr)).unwrap();
        let h1 = fv.get("1xfr").unwrap();
        for h in ["2xfr", "3xfr", "4xfr"] {
            assert!(h1 > fv.get(h).unwrap());
        }
    }

    #[test]
    fn noise_gives_no_dominant_bearing_band() {
        let spec = presets::bearing(&presets::BearingFrequencies {
            bpfo_hz: 236.4,
            bpfi_hz: 296.9,
            bsf_hz: 139.9,
            envelope_band: (2000.0, 6000.0),
        });
        let mut sums = [0.0; 3];
        let mut ratios = Vec::new();
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..4096).map(|_| StandardNormal.sample(&mut rng)).collect();
            let fv = extract(&sig(x, 20480.0), &spec).unwrap();
            let b: Vec<f64> = ["BPFO", "BPFI", "BSF"].iter().map(|n| fv.get(n).unwrap()).collect();
            for (s, v) in sums.iter_mut().zip(&b) {
                *s += v;
            }
            let hi = b.iter().cloned().fold(f64::MIN, f64::max);
            let lo = b.iter().cloned().fold(f64::MAX, f64::min);
            ratios.push(hi / lo);
        }
        let hi = sums.iter().cloned().fold(f64::MIN, f64::max);
        let lo = sums.iter().cloned().fold(f64::MAX, f64::min);
        assert!(hi / lo < 1.5, "mean band energies {sums:?}");
        ratios.sort_by(f64::total_cmp);
        assert!(ratios[50] < 3.0, "median max/min ratio {}", ratios[50]);
    }

    #[test]
    fn silent_signal_fails_in_kurtosis() {
        let spec = presets::bearing(&presets::BearingFrequencies {
            bpfo_hz: 236.4,
            bpfi_hz: 296.9,
            bsf_hz: 139.9,
            envelope_band: (2000.0, 6000.0),
        });
        assert!(matches!(
            extract(&sig(vec![0.0; 4096], 20480.0), &spec),
            Err(Error::DegenerateSignal(_))
        ));
    }

    #[test]
    fn center_above_nyquist_is_rejected() {
        let spec = FeatureSpec::new(vec![FeatureDef::band("hi", 600.0, Some(5.0), SpectralBasis::Direct)])
            .unwrap();
        assert!(matches!(
            extract(&sig(vec![1.0; 1000], 1000.0), &spec),
            Err(Error::InvalidSpec(_))
        ));
    }

    #[test]
    fn extract_is_deterministic() {
        let spec = presets::mechanical(10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..1000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = sig(x, 200.0);
        let a = extract(&s, &spec).unwrap();
        let b = extract(&s, &spec).unwrap();
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_band_is_flagged() {
        let spec =
            FeatureSpec::new(vec![FeatureDef::band("narrow", 10.3, Some(0.01), SpectralBasis::Direct)])
                .unwrap();
        let fv = extract(&sig(sine(100, 10), 100.0), &spec).unwrap();
        assert_eq!(fv.values[0], 0.0);
        assert_eq!(fv.warnings.len(), 1);
    }

    #[test]
    fn spec_validation() {
        let dup = FeatureSpec::new(vec![
            FeatureDef::time_stat("rms", Statistic::Rms),
            FeatureDef::time_stat("rms", Statistic::Kurtosis),
        ]);
        assert!(matches!(dup, Err(Error::InvalidSpec(_))));

        let json = r#"{"features":[{"name":"BPFO","kind":"band_energy","center_hz":100.0,"tag":"specific"}]}"#;
        assert!(FeatureSpec::from_json(json).is_err());

        let json = r#"{"features":[
            {"name":"rms","kind":"time_stat","statistic":"rms","tag":"general"},
            {"name":"BPFO","kind":"band_energy","center_hz":100.0,
             "basis":{"envelope":{"low_hz":1000.0,"high_hz":3000.0}},
             "tag":"specific","fault_label":"outer race"},
            {"name":"2xfr","kind":"band_energy","center_hz":20.0,"half_width_hz":1.0,
             "tag":"specific","fault_label":["misalignment","looseness"]}
        ]}"#;
        let spec = FeatureSpec::from_json(json).unwrap();
        assert_eq!(spec.fault_label("BPFO"), Some("outer race"));
        assert_eq!(spec.fault_label("2xfr"), None);
        assert!(!spec.has_single_fault_labels());
        let again = FeatureSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn tag_partition_covers_every_feature() {
        for spec in [
            presets::mechanical(28.6),
            presets::gearbox(30.0, 960.0, 1440.0),
            presets::bearing(&presets::BearingFrequencies {
                bpfo_hz: 236.4,
                bpfi_hz: 296.9,
                bsf_hz: 139.9,
                envelope_band: (2000.0, 6000.0),
            }),
        ] {
            let g: HashSet<_> = spec.general().map(|f| f.name.clone()).collect();
            let s: HashSet<_> = spec.specific().map(|f| f.name.clone()).collect();
            assert!(g.is_disjoint(&s));
            assert_eq!(g.len() + s.len(), spec.len());
        }
    }

    #[test]
    fn standardize_examples() {
        let single = FeatureTable::new(vec!["a".into(), "b".into()], vec![vec![4.0, -2.0]], None).unwrap();
        let (z, params) = standardize(&single, &single).unwrap();
        assert_eq!(z.rows()[0], vec![0.0, 0.0]);
        assert_eq!(params.zero_std, vec![true, true]);

        // mean 10, population std 2
        let train = FeatureTable::new(vec!["a".into()], vec![vec![8.0], vec![12.0]], None).unwrap();
        let probe = FeatureTable::new(vec!["a".into()], vec![vec![14.0]], None).unwrap();
        let (z, _) = standardize(&train, &probe).unwrap();
        assert_abs_diff_eq!(z.rows()[0][0], 2.0, epsilon = 1e-12);

        let empty = FeatureTable::new(vec!["a".into()], vec![], None).unwrap();
        assert!(standardize(&empty, &probe).is_err());
    }

    proptest::proptest! {
        #[test]
        fn standardize_round_trips(rows in proptest::collection::vec(
            proptest::collection::vec(-1e3f64..1e3, 3), 1..20)) {
            let t = FeatureTable::new(vec!["a".into(), "b".into(), "c".into()], rows, None).unwrap();
            let (z, params) = standardize(&t, &t).unwrap();
            let back = params.invert_table(&z);
            for (r, b) in t.rows().iter().zip(back.rows()) {
                for (x, y) in r.iter().zip(b) {
                    proptest::prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
                }
            }
        }
    }
}
