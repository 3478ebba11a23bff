//! Trace files: `time,voltage` CSV and raw little-endian f64 with a JSON sidecar.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{AcquisitionMeta, Trace};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvOptions {
    /// `None` detects a header from the first row.
    pub header: Option<bool>,
    /// Falls back to the sidecar, then to the time column spacing.
    pub sample_rate_hz: Option<f64>,
    /// Falls back to the sidecar.
    pub clock_hz: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum TraceFormat {
    Csv(CsvOptions),
    /// Little-endian f64 samples; metadata comes from the sidecar.
    Raw,
}

impl TraceFormat {
    /// Picks CSV for `.csv` files and raw otherwise.
    pub fn from_extension(path: &Path, csv: CsvOptions) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => TraceFormat::Csv(csv),
            _ => TraceFormat::Raw,
        }
    }
}

/// `trace.bin` -> `trace.bin.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

fn read_sidecar(path: &Path) -> Result<Option<AcquisitionMeta>> {
    let side = sidecar_path(path);
    if !side.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::Metadata {
            path: side,
            msg: e.to_string(),
        })
}

fn write_sidecar(path: &Path, meta: &AcquisitionMeta) -> Result<()> {
    let side = sidecar_path(path);
    let text = serde_json::to_string(meta).expect("metadata serializes");
    fs::write(&side, text).map_err(|e| Error::io(&side, e))
}

pub fn load_trace<T: Scalar>(path: &Path, format: &TraceFormat) -> Result<Trace<T>> {
    match format {
        TraceFormat::Csv(opts) => load_csv(path, opts),
        TraceFormat::Raw => load_raw(path),
    }
}

fn load_csv<T: Scalar>(path: &Path, opts: &CsvOptions) -> Result<Trace<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut times = Vec::new();
    let mut samples = Vec::new();
    let mut first_row = true;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::ParseLine {
            path: path.to_path_buf(),
            line: line_no,
            msg,
        };
        let mut cols = line.split(',').map(str::trim);
        let (Some(t), Some(v), None) = (cols.next(), cols.next(), cols.next()) else {
            return Err(err(format!(
                "expected two columns `time,voltage`, got {line:?}"
            )));
        };
        if first_row {
            first_row = false;
            if opts.header.unwrap_or_else(|| t.parse::<f64>().is_err()) {
                continue;
            }
        }
        let t: f64 = t
            .parse()
            .map_err(|_| err(format!("time {t:?} is not a number")))?;
        let v: f64 = v
            .parse()
            .map_err(|_| err(format!("voltage {v:?} is not a number")))?;
        if !t.is_finite() || !v.is_finite() {
            return Err(err(format!("non-finite value in row {line:?}")));
        }
        let sample = T::lit(v);
        if !sample.is_finite() {
            return Err(err(format!("voltage {v} overflows the sample type")));
        }
        times.push(t);
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(Error::Metadata {
            path: path.to_path_buf(),
            msg: "no samples".into(),
        });
    }
    let sidecar = read_sidecar(path)?;
    let clock = opts
        .clock_hz
        .or(sidecar.map(|m| m.clock_hz()))
        .ok_or_else(|| Error::Metadata {
            path: path.to_path_buf(),
            msg: "clock rate missing: pass it explicitly or provide a sidecar".into(),
        })?;
    let rate = match opts.sample_rate_hz.or(sidecar.map(|m| m.sample_rate_hz())) {
        Some(r) => r,
        None => {
            if times.len() < 2 {
                return Err(Error::Metadata {
                    path: path.to_path_buf(),
                    msg: "sample rate missing and one row is not enough to infer it".into(),
                });
            }
            let span = times[times.len() - 1] - times[0];
            if span <= 0.0 {
                return Err(Error::Metadata {
                    path: path.to_path_buf(),
                    msg: "time column is not increasing".into(),
                });
            }
            ((times.len() - 1) as f64 / span).round()
        }
    };
    let meta = AcquisitionMeta::new(rate, clock).map_err(|e| Error::Metadata {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    Trace::new(samples, meta)
}

fn load_raw<T: Scalar>(path: &Path) -> Result<Trace<T>> {
    let meta = read_sidecar(path)?.ok_or_else(|| Error::Metadata {
        path: sidecar_path(path),
        msg: "raw traces need a metadata sidecar".into(),
    })?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 8 != 0 {
        return Err(Error::ParseBytes {
            path: path.to_path_buf(),
            offset: bytes.len() - bytes.len() % 8,
            msg: "trailing partial f64".into(),
        });
    }
    if bytes.is_empty() {
        return Err(Error::ParseBytes {
            path: path.to_path_buf(),
            offset: 0,
            msg: "no samples".into(),
        });
    }
    let mut samples = Vec::with_capacity(bytes.len() / 8);
    for (i, chunk) in bytes.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        let s = T::lit(v);
        if !v.is_finite() || !s.is_finite() {
            return Err(Error::ParseBytes {
                path: path.to_path_buf(),
                offset: i * 8,
                msg: format!("non-finite sample {v}"),
            });
        }
        samples.push(s);
    }
    Trace::new(samples, meta)
}

/// Writes `time_s,voltage_v` rows and a metadata sidecar.
pub fn write_csv<T: Scalar>(trace: &Trace<T>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let dt = trace.meta().sample_period();
    let io = |e| Error::io(path, e);
    writeln!(w, "time_s,voltage_v").map_err(io)?;
    for (i, s) in trace.samples().iter().enumerate() {
        writeln!(w, "{},{}", i as f64 * dt, s).map_err(io)?;
    }
    w.flush().map_err(io)?;
    write_sidecar(path, trace.meta())
}

/// Writes little-endian f64 samples plus the `<path>.json` sidecar.
pub fn write_raw<T: Scalar>(trace: &Trace<T>, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in trace.samples() {
        w.write_all(&s.as_f64().to_le_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    write_sidecar(path, trace.meta())
}
