//! Traces, acquisition metadata, synthetic generation and clock-cycle segmentation.

mod io;
mod program;
mod synth;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;

pub use io::{load_trace, sidecar_path, write_csv, write_raw, CsvOptions, TraceFormat};
pub use program::{
    CycleLabel, Instruction, ProgramLoop, LOOP_RESTART, REFERENCE_PRESET, REFERENCE_SUBSET,
};
pub use synth::{synthesize_trace, HarmonicTemplates, SignalTemplates, TraceModelParams};

/// Sampling setup of a capture. The sample rate is an integer multiple of the clock.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Sidecar", into = "Sidecar")]
pub struct AcquisitionMeta {
    sample_rate_hz: f64,
    clock_hz: f64,
    samples_per_cycle: usize,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    sample_rate_hz: f64,
    clock_hz: f64,
}

impl TryFrom<Sidecar> for AcquisitionMeta {
    type Error = Error;
    fn try_from(s: Sidecar) -> Result<Self> {
        AcquisitionMeta::new(s.sample_rate_hz, s.clock_hz)
    }
}

impl From<AcquisitionMeta> for Sidecar {
    fn from(m: AcquisitionMeta) -> Self {
        Sidecar {
            sample_rate_hz: m.sample_rate_hz,
            clock_hz: m.clock_hz,
        }
    }
}

impl AcquisitionMeta {
    pub fn new(sample_rate_hz: f64, clock_hz: f64) -> Result<Self> {
        ensure!(
            sample_rate_hz.is_finite() && sample_rate_hz > 0.0,
            "sample rate must be positive, got {sample_rate_hz}"
        );
        ensure!(
            clock_hz.is_finite() && clock_hz > 0.0,
            "clock rate must be positive, got {clock_hz}"
        );
        let ratio = sample_rate_hz / clock_hz;
        let whole = ratio.round();
        ensure!(
            whole >= 1.0 && (ratio - whole).abs() <= 1e-9 * ratio,
            "sample rate {sample_rate_hz} Hz is not an integer multiple of clock {clock_hz} Hz"
        );
        Ok(Self {
            sample_rate_hz,
            clock_hz,
            samples_per_cycle: whole as usize,
        })
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn clock_hz(&self) -> f64 {
        self.clock_hz
    }

    /// Sampling period in seconds.
    pub fn sample_period(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn samples_per_cycle(&self) -> usize {
        self.samples_per_cycle
    }
}

/// Samples per clock cycle of a capture.
pub fn samples_per_cycle(meta: &AcquisitionMeta) -> usize {
    meta.samples_per_cycle()
}

/// A sampled voltage sequence. Never empty, every sample finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Trace<T> {
    samples: Vec<T>,
    meta: AcquisitionMeta,
}

impl<T: Scalar> Trace<T> {
    pub fn new(samples: Vec<T>, meta: AcquisitionMeta) -> Result<Self> {
        ensure!(!samples.is_empty(), "trace has no samples");
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, meta })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn meta(&self) -> &AcquisitionMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    /// Keeps the first `len` samples.
    pub fn truncated(mut self, len: usize) -> Result<Self> {
        ensure!(len >= 1, "cannot truncate a trace to zero samples");
        self.samples.truncate(len);
        Ok(self)
    }

    /// Multiplies every sample by `gain`.
    pub fn scaled(&self, gain: T) -> Result<Self> {
        Self::new(self.samples.iter().map(|&s| s * gain).collect(), self.meta)
    }
}

/// One clock-cycle window with its instruction label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledWindow<T> {
    pub samples: Vec<T>,
    pub label: CycleLabel,
    /// Which complete loop of the trace the window came from.
    pub loop_index: usize,
    /// Cycle position inside the loop.
    pub position: usize,
}

/// Cuts `trace` into labeled clock-cycle windows starting at sample `offset`.
///
/// Only complete loops are emitted; a trailing partial loop is discarded.
pub fn segment<T: Scalar>(
    trace: &Trace<T>,
    program: &ProgramLoop,
    offset: usize,
) -> Result<Vec<LabeledWindow<T>>> {
    let spc = trace.meta().samples_per_cycle();
    let labels = program.cycle_labels();
    let loop_len = labels.len() * spc;
    let available = trace.len().saturating_sub(offset);
    let loops = available / loop_len;
    if loops == 0 {
        return Err(Error::invalid(format!(
            "trace has {available} samples after offset {offset}, one loop needs {loop_len}"
        )));
    }
    let mut windows = Vec::with_capacity(loops * labels.len());
    let samples = &trace.samples()[offset..];
    for loop_index in 0..loops {
        for (position, label) in labels.iter().enumerate() {
            let start = loop_index * loop_len + position * spc;
            windows.push(LabeledWindow {
                samples: samples[start..start + spc].to_vec(),
                label: label.clone(),
                loop_index,
                position,
            });
        }
    }
    Ok(windows)
}

/// Element-wise mean of equally long windows.
pub fn mean_windows<T: Scalar>(windows: &[&[T]]) -> Result<Vec<T>> {
    ensure!(!windows.is_empty(), "nothing to average");
    let len = windows[0].len();
    if let Some(bad) = windows.iter().position(|w| w.len() != len) {
        return Err(Error::invalid(format!(
            "window {bad} has length {}, expected {len}",
            windows[bad].len()
        )));
    }
    let k = T::from_usize_lossy(windows.len());
    Ok((0..len)
        .map(|i| windows.iter().map(|w| w[i]).sum::<T>() / k)
        .collect())
}

/// Averages the first `k` loops position by position.
///
/// `windows` must be in segmentation order (as returned by [`segment`]).
pub fn average_loops<T: Scalar>(
    windows: &[LabeledWindow<T>],
    k: usize,
) -> Result<Vec<LabeledWindow<T>>> {
    ensure!(k >= 1, "need at least one loop to average");
    ensure!(!windows.is_empty(), "nothing to average");
    let per_loop = windows
        .iter()
        .filter(|w| w.loop_index == windows[0].loop_index)
        .count();
    ensure!(
        windows.len() >= k * per_loop,
        "{k} loops requested, only {} available",
        windows.len() / per_loop
    );
    (0..per_loop)
        .map(|p| {
            let group: Vec<&[T]> = (0..k)
                .map(|i| windows[i * per_loop + p].samples.as_slice())
                .collect();
            let first = &windows[p];
            for i in 1..k {
                let w = &windows[i * per_loop + p];
                if w.label != first.label {
                    return Err(Error::invalid(format!(
                        "loop {i} position {p} has label {}, expected {}",
                        w.label, first.label
                    )));
                }
            }
            Ok(LabeledWindow {
                samples: mean_windows(&group)?,
                label: first.label.clone(),
                loop_index: 0,
                position: p,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(sr: f64, clk: f64) -> AcquisitionMeta {
        AcquisitionMeta::new(sr, clk).unwrap()
    }

    #[test]
    fn samples_per_cycle_examples() {
        assert_eq!(samples_per_cycle(&meta(500e6, 1e6)), 500);
        assert_eq!(samples_per_cycle(&meta(1e6, 1e6)), 1);
        assert_eq!(samples_per_cycle(&meta(250e6, 1e6)), 250);
    }

    #[test]
    fn meta_rejects_bad_rates() {
        assert!(AcquisitionMeta::new(0.0, 1e6).is_err());
        assert!(AcquisitionMeta::new(500e6, -1.0).is_err());
        assert!(AcquisitionMeta::new(1.5e6, 1e6).is_err());
        assert!(AcquisitionMeta::new(0.5e6, 1e6).is_err());
        assert!(AcquisitionMeta::new(f64::NAN, 1e6).is_err());
    }

    #[test]
    fn trace_rejects_non_finite() {
        let m = meta(2.0, 1.0);
        assert!(Trace::new(vec![0.0, f64::NAN], m).is_err());
        assert!(Trace::<f64>::new(vec![], m).is_err());
    }

    fn toy_loop() -> ProgramLoop {
        ProgramLoop::new(vec![
            Instruction {
                mnemonic: "nop".into(),
                clock_length: 1,
            },
            Instruction {
                mnemonic: "mul".into(),
                clock_length: 2,
            },
        ])
        .unwrap()
    }

    #[test]
    fn segment_single_loop_and_partition() {
        let m = meta(4.0, 1.0);
        let samples: Vec<f64> = (0..12 + 5).map(|i| i as f64).collect();
        let tr = Trace::new(samples.clone(), m).unwrap();
        let w = segment(&tr, &toy_loop(), 0).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[1].label, CycleLabel::new("mul", 0));
        assert_eq!(w[2].label, CycleLabel::new("mul", 1));
        let joined: Vec<f64> = w.iter().flat_map(|w| w.samples.clone()).collect();
        assert_eq!(joined, samples[..12]);

        let w = segment(&tr, &toy_loop(), 5).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w[0].samples[0], 5.0);
        assert!(segment(&tr, &toy_loop(), 6).is_err());
    }

    #[test]
    fn segment_reference_loop_exact() {
        let lp = ProgramLoop::reference();
        let m = meta(500e6, 1e6);
        let tr = Trace::new(vec![0.0f32; 287 * 500], m).unwrap();
        let w = segment(&tr, &lp, 0).unwrap();
        assert_eq!(w.len(), 287);
    }

    #[test]
    fn mean_windows_examples() {
        let a = [0.0, 2.0];
        let b = [2.0, 0.0];
        assert_eq!(mean_windows(&[&a[..], &b[..]]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(mean_windows(&[&a[..]]).unwrap(), a.to_vec());
        assert!(mean_windows(&[&a[..], &[1.0][..]]).is_err());
        assert!(mean_windows::<f64>(&[]).is_err());
    }

    #[test]
    fn average_loops_identity_and_mean() {
        let m = meta(2.0, 1.0);
        let samples: Vec<f64> = (0..12).map(|i| i as f64).collect();
        let tr = Trace::new(samples, m).unwrap();
        let w = segment(&tr, &toy_loop(), 0).unwrap();
        assert_eq!(w.len(), 6);
        let one = average_loops(&w, 1).unwrap();
        assert_eq!(one.len(), 3);
        assert_eq!(one[0].samples, w[0].samples);
        let two = average_loops(&w, 2).unwrap();
        assert_eq!(two[0].samples, vec![3.0, 4.0]);
        assert!(average_loops(&w, 3).is_err());
        assert!(average_loops(&w, 0).is_err());
    }
}
