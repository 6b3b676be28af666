//! File formats: signals, feature tables, fitted models and line-delimited JSON.
//!
//! * Signal CSV: an optional `# sample_rate=<Hz>` header line, then one sample per line.
//! * Signal binary: `VIB1`, a little-endian u32 sample rate, then little-endian f32
//!   samples.
//! * Feature table CSV: a header of feature names, optionally followed by a `label`
//!   column holding 0 (normal) or 1 (anomaly).
//! * Model container: `VADM`, u16 format version, u8 algorithm id, u32 payload length,
//!   then the JSON payload of the fitted detector. All integers little-endian.
//!
//! Floats are written in their shortest round-trip form, so every text format reads
//! back bit-for-bit.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::detectors::{Algorithm, FittedDetector};
use crate::error::{Error, Result};
use crate::features::FeatureTable;
use crate::signal::VibrationSignal;

pub const SIGNAL_MAGIC: &[u8; 4] = b"VIB1";
pub const MODEL_MAGIC: &[u8; 4] = b"VADM";
pub const MODEL_VERSION: u16 = 1;
const LABEL_COLUMN: &str = "label";

fn format_err(path: Option<&Path>, msg: impl std::fmt::Display) -> Error {
    match path {
        Some(p) => Error::Format(format!("{}: {msg}", p.display())),
        None => Error::Format(msg.to_string()),
    }
}

/// Parses the signal CSV format. `default_rate` is used when the header is absent.
pub fn parse_signal_csv(text: &str, default_rate: Option<f64>) -> Result<VibrationSignal> {
    let mut rate = default_rate;
    let mut samples = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let header = line.trim_start_matches('#').trim();
        if let Some(v) = header.strip_prefix("sample_rate=") {
            if !samples.is_empty() {
                return Err(Error::Format(format!("line {}: sample_rate after data", n + 1)));
            }
            rate = Some(
                v.trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("line {}: bad sample rate '{v}'", n + 1)))?,
            );
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let v: f64 = line
            .parse()
            .map_err(|_| Error::Format(format!("line {}: '{line}' is not a number", n + 1)))?;
        samples.push(v);
    }
    let rate = rate.ok_or_else(|| Error::Format("no sample_rate header and no default given".into()))?;
    VibrationSignal::new(samples, rate)
}

pub fn signal_to_csv(signal: &VibrationSignal) -> String {
    let mut out = format!("# sample_rate={}\n", signal.sample_rate());
    for v in signal.samples() {
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

pub fn read_signal_csv(path: &Path, default_rate: Option<f64>) -> Result<VibrationSignal> {
    parse_signal_csv(&fs::read_to_string(path)?, default_rate).map_err(|e| match e {
        Error::Format(m) => format_err(Some(path), m),
        e => e,
    })
}

pub fn write_signal_csv(path: &Path, signal: &VibrationSignal) -> Result<()> {
    fs::write(path, signal_to_csv(signal))?;
    Ok(())
}

pub fn decode_signal_bin(bytes: &[u8]) -> Result<VibrationSignal> {
    if bytes.len() < 8 || &bytes[..4] != SIGNAL_MAGIC {
        return Err(Error::Format("missing VIB1 header".into()));
    }
    let rate = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    let body = &bytes[8..];
    if !body.len().is_multiple_of(4) {
        return Err(Error::Format(format!("{} trailing bytes after the last sample", body.len() % 4)));
    }
    let samples = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    VibrationSignal::new(samples, rate as f64)
}

/// Samples are stored as f32; the sample rate must be a whole number of Hz.
pub fn encode_signal_bin(signal: &VibrationSignal) -> Result<Vec<u8>> {
    let rate = signal.sample_rate();
    if rate.fract() != 0.0 || rate > u32::MAX as f64 {
        return Err(Error::Format(format!("binary signals need an integer sample rate, got {rate}")));
    }
    let mut out = Vec::with_capacity(8 + 4 * signal.len());
    out.extend_from_slice(SIGNAL_MAGIC);
    out.extend_from_slice(&(rate as u32).to_le_bytes());
    for v in signal.samples() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn read_signal_bin(path: &Path) -> Result<VibrationSignal> {
    decode_signal_bin(&fs::read(path)?).map_err(|e| match e {
        Error::Format(m) => format_err(Some(path), m),
        e => e,
    })
}

pub fn write_signal_bin(path: &Path, signal: &VibrationSignal) -> Result<()> {
    fs::write(path, encode_signal_bin(signal)?)?;
    Ok(())
}

fn is_signal_file(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
        Some("csv" | "bin" | "vib")
    )
}

/// Reads a signal, picking the format from the extension (`.csv`, or `.bin`/`.vib`).
pub fn read_signal(path: &Path, default_rate: Option<f64>) -> Result<VibrationSignal> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("csv") => read_signal_csv(path, default_rate),
        Some("bin" | "vib") => read_signal_bin(path),
        _ => Err(format_err(Some(path), "unknown signal extension (expected .csv, .bin or .vib)")),
    }
}

/// Signal files directly inside `dir`, sorted by file name.
pub fn list_signal_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && is_signal_file(p))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::NoInputs(format!("no signal files in {}", dir.display())));
    }
    Ok(files)
}

pub fn write_table_csv<W: Write>(w: W, table: &FeatureTable) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<&str> = table.names().iter().map(String::as_str).collect();
    if table.labels().is_some() {
        header.push(LABEL_COLUMN);
    }
    out.write_record(&header)?;
    for (i, row) in table.rows().iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(f64::to_string).collect();
        if let Some(l) = table.labels() {
            rec.push(if l[i] { "1" } else { "0" }.into());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(r: R) -> Result<FeatureTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let label_col = header.iter().position(|h| h == LABEL_COLUMN);
    if let Some(p) = label_col {
        if p + 1 != header.len() {
            return Err(Error::Format("the label column must come last".into()));
        }
    }
    let names: Vec<String> = header.iter().filter(|h| *h != LABEL_COLUMN).cloned().collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut row = Vec::with_capacity(names.len());
        for (j, field) in rec.iter().enumerate() {
            if Some(j) == label_col {
                labels.push(match field {
                    "0" | "normal" | "false" => false,
                    "1" | "anomaly" | "true" => true,
                    other => return Err(Error::Format(format!("row {}: bad label '{other}'", i + 1))),
                });
            } else {
                row.push(field.parse::<f64>().map_err(|_| {
                    Error::Format(format!("row {}, column '{}': '{field}' is not a number", i + 1, header[j]))
                })?);
            }
        }
        rows.push(row);
    }
    FeatureTable::new(names, rows, label_col.map(|_| labels))
}

pub fn save_table(path: &Path, table: &FeatureTable) -> Result<()> {
    write_table_csv(BufWriter::new(fs::File::create(path)?), table)
}

pub fn load_table(path: &Path) -> Result<FeatureTable> {
    read_table_csv(BufReader::new(fs::File::open(path)?)).map_err(|e| match e {
        Error::Format(m) => format_err(Some(path), m),
        e => e,
    })
}

pub fn encode_model(model: &FittedDetector) -> Result<Vec<u8>> {
    let payload = serde_json::to_vec(model)?;
    let len = u32::try_from(payload.len()).map_err(|_| Error::Format("model payload exceeds 4 GiB".into()))?;
    let mut out = Vec::with_capacity(11 + payload.len());
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    out.push(model.algorithm().id());
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(&payload);
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<FittedDetector> {
    if bytes.len() < 11 || &bytes[..4] != MODEL_MAGIC {
        return Err(Error::Format("missing VADM header".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model format version {version}")));
    }
    let algorithm = Algorithm::from_id(bytes[6])
        .ok_or_else(|| Error::Format(format!("unknown algorithm id {}", bytes[6])))?;
    let len = u32::from_le_bytes(bytes[7..11].try_into().expect("4 bytes")) as usize;
    let payload = &bytes[11..];
    if payload.len() != len {
        return Err(Error::Format(format!("payload is {} bytes, header says {len}", payload.len())));
    }
    let model: FittedDetector = serde_json::from_slice(payload)?;
    if model.algorithm() != algorithm {
        return Err(Error::Format(format!(
            "header says {algorithm} but the payload holds {}",
            model.algorithm()
        )));
    }
    Ok(model)
}

pub fn save_model(path: &Path, model: &FittedDetector) -> Result<()> {
    fs::write(path, encode_model(model)?)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<FittedDetector> {
    decode_model(&fs::read(path)?).map_err(|e| match e {
        Error::Format(m) => format_err(Some(path), m),
        e => e,
    })
}

pub fn write_jsonl<T: Serialize, W: Write>(mut w: W, items: &[T]) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: DeserializeOwned, R: Read>(r: R) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for line in BufReader::new(r).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Writes serializable records as CSV with a header row.
pub fn write_records<T: Serialize, W: Write>(w: W, items: &[T]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for item in items {
        out.serialize(item)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_records<T: DeserializeOwned, R: Read>(r: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(r)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
