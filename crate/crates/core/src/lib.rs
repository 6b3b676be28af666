//! Unsupervised fault detection and explainable diagnosis for rotating machinery.
//!
//! The pipeline has three stages: feature extraction from raw vibration signals
//! ([`features`]), anomaly detection ([`detectors`]) and diagnosis of detected anomalies
//! from per-sample feature importances ([`explain`], [`diagnosis`]).

// Range checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod detectors;
pub mod diagnosis;
pub mod error;
pub mod eval;
pub mod explain;
pub mod features;
pub mod io;
pub mod signal;
pub mod synth;

pub use error::{Error, Result};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
struct ReadmeDoctests;
