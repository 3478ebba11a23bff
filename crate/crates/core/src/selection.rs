//! Mother wavelet selection by time-domain cross-correlation against trace data.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{ensure, Error, Result};
use crate::scalar::{dot, Scalar};
use crate::trace::Trace;
use crate::wavelets::{eval_wavelet, WaveletSpec};

/// Default number of points the mother wavelet is sampled at.
pub const DEFAULT_WAVELET_SAMPLES: usize = 100;

/// Pearson correlation of the sampled wavelet against every full-overlap lag.
#[derive(Clone, Debug, PartialEq)]
pub struct XcorrSequence<T> {
    pub values: Vec<T>,
    /// Lags whose signal segment had zero variance; their value is reported as 0.
    pub flagged: Vec<usize>,
}

/// Sampled wavelet with its mean removed, plus its norm.
struct CenteredWavelet<T> {
    values: Vec<T>,
    norm: T,
}

impl<T: Scalar> CenteredWavelet<T> {
    fn new(wavelet: &WaveletSpec, n: usize) -> Result<Self> {
        let (_, psi) = eval_wavelet::<T>(wavelet, n)?;
        let mean = psi.iter().copied().sum::<T>() / T::from_usize_lossy(n);
        let values: Vec<T> = psi.iter().map(|&p| p - mean).collect();
        let norm = dot(&values, &values).sqrt();
        ensure!(
            norm > T::zero(),
            "{wavelet} sampled at {n} points is constant"
        );
        Ok(Self { values, norm })
    }

    fn correlate(&self, window: &[T]) -> XcorrSequence<T> {
        let n = self.values.len();
        let nt = T::from_usize_lossy(n);
        let lags = window.len() - n + 1;
        let mut values = Vec::with_capacity(lags);
        let mut flagged = Vec::new();
        for k in 0..lags {
            let seg = &window[k..k + n];
            let mean = seg.iter().copied().sum::<T>() / nt;
            let (mut ss, mut peak) = (T::zero(), T::zero());
            for &s in seg {
                let d = s - mean;
                ss += d * d;
                peak = peak.max(s.abs());
            }
            if ss <= T::lit(64.0) * nt * (T::epsilon() * peak).powi(2) {
                flagged.push(k);
                values.push(T::zero());
                continue;
            }
            // the centered wavelet sums to zero, so the segment mean drops out
            values.push(dot(seg, &self.values) / (ss.sqrt() * self.norm));
        }
        XcorrSequence { values, flagged }
    }
}

fn has_variance<T: Scalar>(x: &[T]) -> bool {
    x.iter().any(|&v| v != x[0])
}

/// Normalized sliding correlation between `window` and the wavelet sampled at `n` points.
pub fn xcorr_sequence<T: Scalar>(
    window: &[T],
    wavelet: &WaveletSpec,
    n: usize,
) -> Result<XcorrSequence<T>> {
    ensure!(n >= 2, "wavelet needs at least two samples");
    ensure!(
        window.len() >= n,
        "window of {} samples is shorter than the {n}-sample wavelet",
        window.len()
    );
    ensure!(
        has_variance(window),
        "signal is constant; correlation undefined"
    );
    Ok(CenteredWavelet::new(wavelet, n)?.correlate(window))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WaveletScore {
    pub wavelet: String,
    pub mean_abs_xcorr: f64,
    pub max_abs_xcorr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct XcorrReport {
    /// One entry per candidate, in the order given.
    pub scores: Vec<WaveletScore>,
    /// Wavelet names, best first.
    pub ranking: Vec<String>,
}

impl XcorrReport {
    pub fn score(&self, name: &str) -> Option<&WaveletScore> {
        self.scores.iter().find(|s| s.wavelet == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wavelet,mean,max,rank\n");
        for s in &self.scores {
            let rank = self
                .ranking
                .iter()
                .position(|n| *n == s.wavelet)
                .map_or(0, |r| r + 1);
            out.push_str(&format!(
                "{},{},{},{}\n",
                s.wavelet, s.mean_abs_xcorr, s.max_abs_xcorr, rank
            ));
        }
        out
    }
}

/// Scores each candidate over consecutive `window_length` windows of the trace.
///
/// Mean and max of `|r|` are taken over every lag of every window; ranking is by max,
/// then mean, then name.
pub fn rank_wavelets<T: Scalar>(
    trace: &Trace<T>,
    candidates: &[WaveletSpec],
    window_length: usize,
    wavelet_samples: usize,
) -> Result<XcorrReport> {
    ensure!(!candidates.is_empty(), "no candidate wavelets");
    ensure!(wavelet_samples >= 2, "wavelet needs at least two samples");
    ensure!(
        window_length >= wavelet_samples,
        "window length {window_length} is shorter than the wavelet ({wavelet_samples})"
    );
    let windows: Vec<&[T]> = trace.samples().chunks_exact(window_length).collect();
    if windows.is_empty() {
        return Err(Error::invalid(format!(
            "trace of {} samples holds no {window_length}-sample window",
            trace.len()
        )));
    }
    ensure!(
        has_variance(trace.samples()),
        "trace is constant; correlation undefined"
    );

    let mut scores = Vec::with_capacity(candidates.len());
    for spec in candidates {
        let wavelet = CenteredWavelet::<T>::new(spec, wavelet_samples)?;
        let (mut sum, mut max, mut count) = (0.0f64, 0.0f64, 0usize);
        for w in &windows {
            for r in wavelet.correlate(w).values {
                let a = r.abs().as_f64();
                sum += a;
                max = max.max(a);
                count += 1;
            }
        }
        scores.push(WaveletScore {
            wavelet: spec.name().to_string(),
            mean_abs_xcorr: sum / count as f64,
            max_abs_xcorr: max,
        });
    }
    let mut order: Vec<&WaveletScore> = scores.iter().collect();
    order.sort_by(|a, b| {
        b.max_abs_xcorr
            .partial_cmp(&a.max_abs_xcorr)
            .unwrap_or(Ordering::Equal)
            .then(
                b.mean_abs_xcorr
                    .partial_cmp(&a.mean_abs_xcorr)
                    .unwrap_or(Ordering::Equal),
            )
            .then_with(|| a.wavelet.cmp(&b.wavelet))
    });
    let ranking = order.iter().map(|s| s.wavelet.clone()).collect();
    Ok(XcorrReport { scores, ranking })
}
