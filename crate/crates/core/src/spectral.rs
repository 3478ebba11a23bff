//! Discrete Fourier transforms and the short-time Fourier transform.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Scalar;

/// Complex DFT bins of a real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum<T> {
    pub bins: Vec<Complex<T>>,
    /// Hz per bin: sample rate over transform length.
    pub bin_resolution: T,
}

impl<T: Scalar> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.bins.iter().map(|c| c.norm()).collect()
    }

    pub fn frequency(&self, bin: usize) -> T {
        T::from_usize_lossy(bin) * self.bin_resolution
    }
}

/// The O(n^2) definition, evaluated term by term.
pub fn dft<T: Scalar>(signal: &[T], sample_rate: T) -> Result<Spectrum<T>> {
    ensure!(!signal.is_empty(), "cannot transform an empty signal");
    let n = signal.len();
    let nt = T::from_usize_lossy(n);
    let bins = (0..n)
        .map(|k| {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (j, &x) in signal.iter().enumerate() {
                // reduce k*j mod n first so the angle stays small
                let m = ((k as u128 * j as u128) % n as u128) as usize;
                let angle = -T::TAU() * T::from_usize_lossy(m) / nt;
                acc += Complex::new(x * angle.cos(), x * angle.sin());
            }
            acc
        })
        .collect();
    Ok(Spectrum {
        bins,
        bin_resolution: sample_rate / nt,
    })
}

/// Fast transform at the exact signal length.
pub fn fft<T: Scalar>(signal: &[T], sample_rate: T) -> Result<Spectrum<T>> {
    ensure!(!signal.is_empty(), "cannot transform an empty signal");
    let mut planner = FftPlanner::new();
    Ok(fft_with(&mut planner, signal, sample_rate))
}

pub(crate) fn fft_with<T: Scalar>(
    planner: &mut FftPlanner<T>,
    signal: &[T],
    sample_rate: T,
) -> Spectrum<T> {
    let n = signal.len();
    let mut bins: Vec<Complex<T>> = signal.iter().map(|&x| Complex::new(x, T::zero())).collect();
    planner.plan_fft_forward(n).process(&mut bins);
    Spectrum {
        bins,
        bin_resolution: sample_rate / T::from_usize_lossy(n),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowKind {
    #[default]
    Rectangular,
    /// Periodic Hann.
    Hann,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    pub window_length: usize,
    pub overlap_fraction: f64,
    pub window_kind: WindowKind,
}

impl StftParams {
    pub fn new(
        window_length: usize,
        overlap_fraction: f64,
        window_kind: WindowKind,
    ) -> Result<Self> {
        let p = Self {
            window_length,
            overlap_fraction,
            window_kind,
        };
        p.hop()?;
        Ok(p)
    }

    /// Frame advance in samples.
    pub fn hop(&self) -> Result<usize> {
        ensure!(self.window_length >= 2, "window length must be >= 2");
        ensure!(
            (0.0..1.0).contains(&self.overlap_fraction),
            "overlap fraction {} not in [0, 1)",
            self.overlap_fraction
        );
        let hop = (self.window_length as f64 * (1.0 - self.overlap_fraction)).round() as usize;
        ensure!(hop >= 1, "hop rounds to zero");
        Ok(hop)
    }

    fn taper<T: Scalar>(&self) -> Vec<T> {
        let n = self.window_length;
        match self.window_kind {
            WindowKind::Rectangular => vec![T::one(); n],
            WindowKind::Hann => (0..n)
                .map(|i| {
                    let x = T::TAU() * T::from_usize_lossy(i) / T::from_usize_lossy(n);
                    T::lit(0.5) - T::lit(0.5) * x.cos()
                })
                .collect(),
        }
    }
}

/// Magnitude STFT: `magnitudes[bin][frame]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrogram<T> {
    pub magnitudes: Vec<Vec<T>>,
    pub hop: usize,
    pub bin_resolution: T,
}

impl<T: Scalar> Spectrogram<T> {
    pub fn bins(&self) -> usize {
        self.magnitudes.len()
    }

    pub fn frames(&self) -> usize {
        self.magnitudes.first().map_or(0, Vec::len)
    }
}

/// One column per hop position; frames that would run past the end are dropped.
pub fn stft<T: Scalar>(
    signal: &[T],
    params: &StftParams,
    sample_rate: T,
) -> Result<Spectrogram<T>> {
    let hop = params.hop()?;
    let len = params.window_length;
    ensure!(
        signal.len() >= len,
        "signal of {} samples is shorter than one {len}-sample window",
        signal.len()
    );
    let frames = (signal.len() - len) / hop + 1;
    let taper: Vec<T> = params.taper();
    let mut planner = FftPlanner::new();
    let plan = planner.plan_fft_forward(len);
    let mut magnitudes = vec![vec![T::zero(); frames]; len];
    let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
    for f in 0..frames {
        let start = f * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex::new(signal[start + i] * taper[i], T::zero());
        }
        plan.process(&mut buf);
        for (row, c) in magnitudes.iter_mut().zip(&buf) {
            row[f] = c.norm();
        }
    }
    Ok(Spectrogram {
        magnitudes,
        hop,
        bin_resolution: sample_rate / T::from_usize_lossy(len),
    })
}
