//! Uniformly sampled vibration signals and the spectral primitives built on them.
//!
//! Spectra are one-sided amplitude spectra: a sinusoid of amplitude `A` that falls on a
//! bin shows up with magnitude `A` at that bin, whatever the window, because the
//! window's coherent gain is divided out. Lengths are never padded, so the bin spacing
//! is always exactly `sample_rate / N`.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest signal accepted by the spectral routines.
pub const MIN_SPECTRUM_LEN: usize = 8;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn fft_in_place(buf: &mut [Complex<f64>], inverse: bool) {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        let fft = if inverse {
            planner.plan_fft_inverse(buf.len())
        } else {
            planner.plan_fft_forward(buf.len())
        };
        fft.process(buf);
    });
}

/// A uniformly sampled acceleration record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VibrationSignal {
    samples: Vec<f64>,
    sample_rate: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
}

impl VibrationSignal {
    pub fn new(samples: Vec<f64>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidSignal("signal has no samples".into()));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::InvalidSignal(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidSignal(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.meta.insert(key.into(), value.into());
        self
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn meta(&self) -> &BTreeMap<String, String> {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn nyquist(&self) -> f64 {
        self.sample_rate / 2.0
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    #[default]
    Rectangular,
    Hann,
}

impl WindowKind {
    fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowKind::Rectangular => vec![1.0; n],
            // periodic Hann: exact coherent gain 0.5 for any n
            WindowKind::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

/// One-sided amplitude spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    bin_freqs: Vec<f64>,
    magnitudes: Vec<f64>,
    df: f64,
    /// Number of time samples the spectrum was computed from.
    n_time: usize,
}

impl Spectrum {
    pub fn bin_freqs(&self) -> &[f64] {
        &self.bin_freqs
    }

    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    pub fn df(&self) -> f64 {
        self.df
    }

    pub fn len(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitudes.is_empty()
    }

    /// Frequency of the largest bin, optionally ignoring everything below `min_hz`.
    pub fn peak_freq(&self, min_hz: f64) -> Option<f64> {
        self.bin_freqs
            .iter()
            .zip(&self.magnitudes)
            .filter(|(f, _)| **f >= min_hz)
            .fold(None, |best: Option<(f64, f64)>, (&f, &m)| match best {
                Some((_, bm)) if bm >= m => best,
                _ => Some((f, m)),
            })
            .map(|(f, _)| f)
    }

    /// Magnitude of the bin closest to `freq`.
    pub fn magnitude_at(&self, freq: f64) -> f64 {
        let idx = (freq / self.df).round().max(0.0) as usize;
        self.magnitudes
            .get(idx.min(self.magnitudes.len() - 1))
            .copied()
            .unwrap_or(0.0)
    }

    /// Sum of squared magnitudes over every bin.
    pub fn total_energy(&self) -> f64 {
        self.magnitudes.iter().map(|m| m * m).sum()
    }

    /// Mean-square value of the time signal implied by the spectrum (Parseval).
    ///
    /// Interior bins carry a sinusoid's peak amplitude, so they contribute `m^2 / 2`;
    /// DC and Nyquist contribute `m^2`. Exact for the rectangular window.
    pub fn mean_square(&self) -> f64 {
        let last = self.magnitudes.len() - 1;
        let has_nyquist = self.n_time.is_multiple_of(2);
        self.magnitudes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                if k == 0 || (k == last && has_nyquist) {
                    m * m
                } else {
                    m * m / 2.0
                }
            })
            .sum()
    }

    fn band_mask(&self, center_hz: f64, half_width_hz: f64) -> impl Iterator<Item = usize> + '_ {
        let tol = 1e-9 * self.df.max(1.0);
        self.bin_freqs
            .iter()
            .enumerate()
            .filter(move |(_, f)| (**f - center_hz).abs() <= half_width_hz + tol)
            .map(|(k, _)| k)
    }

    /// Sum of squared magnitudes over bins with `|f - center| <= half_width`.
    ///
    /// Returns 0 when no bin falls inside the band; use [`Spectrum::band_bin_count`] to
    /// tell an empty band from a silent one.
    pub fn band_energy(&self, center_hz: f64, half_width_hz: f64) -> f64 {
        self.band_mask(center_hz, half_width_hz)
            .map(|k| self.magnitudes[k] * self.magnitudes[k])
            .sum()
    }

    pub fn band_bin_count(&self, center_hz: f64, half_width_hz: f64) -> usize {
        self.band_mask(center_hz, half_width_hz).count()
    }
}

/// One-sided amplitude spectrum with coherent-gain correction.
pub fn compute_spectrum(signal: &VibrationSignal, window: WindowKind) -> Result<Spectrum> {
    let n = signal.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::InvalidSignal(format!(
            "spectrum needs at least {MIN_SPECTRUM_LEN} samples, got {n}"
        )));
    }
    let w = window.coefficients(n);
    let coherent_gain = w.iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal
        .samples()
        .iter()
        .zip(&w)
        .map(|(x, w)| Complex::new(x * w, 0.0))
        .collect();
    fft_in_place(&mut buf, false);
    Ok(one_sided(&buf, signal.sample_rate(), coherent_gain))
}

fn one_sided(full: &[Complex<f64>], sample_rate: f64, coherent_gain: f64) -> Spectrum {
    let n = full.len();
    let n_bins = n / 2 + 1;
    let df = sample_rate / n as f64;
    let scale = 1.0 / (n as f64 * coherent_gain);
    let magnitudes = (0..n_bins)
        .map(|k| {
            let m = full[k].norm() * scale;
            let nyquist = n.is_multiple_of(2) && k == n / 2;
            if k == 0 || nyquist {
                m
            } else {
                2.0 * m
            }
        })
        .collect();
    Spectrum {
        bin_freqs: (0..n_bins).map(|k| k as f64 * df).collect(),
        magnitudes,
        df,
        n_time: n,
    }
}

/// Amplitude envelope of the band-passed signal, via the frequency-domain analytic signal.
///
/// The band-pass is a brick-wall mask applied to the spectrum before the negative
/// frequencies are discarded.
pub fn envelope(signal: &VibrationSignal, band: (f64, f64)) -> Result<VibrationSignal> {
    let (low, high) = band;
    let n = signal.len();
    if n < MIN_SPECTRUM_LEN {
        return Err(Error::InvalidSignal(format!(
            "envelope needs at least {MIN_SPECTRUM_LEN} samples, got {n}"
        )));
    }
    if !(low >= 0.0 && low < high && high <= signal.nyquist() + 1e-9) {
        return Err(Error::InvalidBand(format!(
            "band ({low}, {high}) must satisfy 0 <= low < high <= {}",
            signal.nyquist()
        )));
    }
    let df = signal.sample_rate() / n as f64;
    let mut buf: Vec<Complex<f64>> = signal
        .samples()
        .iter()
        .map(|&x| Complex::new(x, 0.0))
        .collect();
    fft_in_place(&mut buf, false);
    let in_band = |k: usize| {
        let f = k as f64 * df;
        f >= low - 1e-9 && f <= high + 1e-9
    };
    let half = n / 2;
    if !(0..=half).any(in_band) {
        return Err(Error::InvalidBand(format!(
            "band ({low}, {high}) contains no frequency bins at df = {df}"
        )));
    }
    for (k, c) in buf.iter_mut().enumerate() {
        let weight = if k == 0 || (n.is_multiple_of(2) && k == half) {
            if in_band(k) {
                1.0
            } else {
                0.0
            }
        } else if k <= (n - 1) / 2 {
            if in_band(k) {
                2.0
            } else {
                0.0
            }
        } else {
            0.0
        };
        *c *= weight;
    }
    fft_in_place(&mut buf, true);
    let env: Vec<f64> = buf.iter().map(|c| c.norm() / n as f64).collect();
    VibrationSignal::new(env, signal.sample_rate())
}

/// Magnitude spectrum of the analytic-signal envelope of the band-passed input.
pub fn envelope_spectrum(signal: &VibrationSignal, band: (f64, f64)) -> Result<Spectrum> {
    envelope_spectrum_with(signal, band, WindowKind::Rectangular)
}

/// [`envelope_spectrum`] with a chosen window on the envelope.
pub fn envelope_spectrum_with(signal: &VibrationSignal, band: (f64, f64), window: WindowKind) -> Result<Spectrum> {
    compute_spectrum(&envelope(signal, band)?, window)
}

/// Free-function form of [`Spectrum::band_energy`].
pub fn band_energy(spectrum: &Spectrum, center_hz: f64, half_width_hz: f64) -> f64 {
    spectrum.band_energy(center_hz, half_width_hz)
}
