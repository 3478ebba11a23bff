//! Continuous wavelet transform: direct-sum reference, FFT fast path, and the
//! scale to pseudo-frequency mapping.
//!
//! Both paths evaluate
//! `C[a][b] = a^(-1/2) * sum_t f[t] * psi((t - b) / a)` with unit sample step,
//! `psi` linearly interpolated from a 2^12-point tabulation and zero outside its
//! support. Samples outside the signal are zero.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::scalar::{dot, Scalar};
use crate::wavelets::{Tabulation, WaveletSpec, TABULATION_POINTS};

/// Strictly increasing positive scales.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScaleSet(Vec<f64>);

impl ScaleSet {
    pub fn new(scales: Vec<f64>) -> Result<Self> {
        ensure!(!scales.is_empty(), "scale set is empty");
        ensure!(
            scales.iter().all(|s| s.is_finite() && *s > 0.0),
            "scales must be positive and finite"
        );
        ensure!(
            scales.windows(2).all(|w| w[0] < w[1]),
            "scales must be strictly increasing"
        );
        Ok(Self(scales))
    }

    /// Inclusive integer-step range `lo, lo+step, ..., <= hi`.
    pub fn range(lo: f64, hi: f64, step: f64) -> Result<Self> {
        ensure!(step > 0.0, "scale step must be positive");
        ensure!(lo <= hi, "scale range {lo}:{hi} is empty");
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|i| lo + step * i as f64).collect())
    }

    /// `1..=max`.
    pub fn up_to(max: usize) -> Result<Self> {
        Self::range(1.0, max as f64, 1.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

impl TryFrom<Vec<f64>> for ScaleSet {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ScaleSet> for Vec<f64> {
    fn from(s: ScaleSet) -> Self {
        s.0
    }
}

/// Accepts `lo:hi[:step]` (inclusive) or a comma-separated list.
impl FromStr for ScaleSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let num = |p: &str| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("bad scale {p:?} in {s:?}")))
        };
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            match parts.as_slice() {
                [lo, hi] => Self::range(num(lo)?, num(hi)?, 1.0),
                [lo, hi, step] => Self::range(num(lo)?, num(hi)?, num(step)?),
                _ => Err(Error::invalid(format!(
                    "scale range {s:?} is not lo:hi[:step]"
                ))),
            }
        } else {
            Self::new(s.split(',').map(num).collect::<Result<_>>()?)
        }
    }
}

impl fmt::Display for ScaleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.0;
        let step = if s.len() > 1 { s[1] - s[0] } else { 1.0 };
        let uniform = s.windows(2).all(|w| ((w[1] - w[0]) - step).abs() < 1e-12);
        if s.len() > 2 && uniform {
            if step == 1.0 {
                write!(f, "{}:{}", s[0], self.max())
            } else {
                write!(f, "{}:{}:{}", s[0], self.max(), step)
            }
        } else {
            let parts: Vec<String> = s.iter().map(|v| v.to_string()).collect();
            f.write_str(&parts.join(","))
        }
    }
}

/// CWT output, row-major `scales x time`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix<T> {
    values: Vec<T>,
    cols: usize,
    scales: ScaleSet,
    sample_period: f64,
}

impl<T: Scalar> CoefficientMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>, scales: ScaleSet, sample_period: f64) -> Result<Self> {
        ensure!(
            rows.len() == scales.len(),
            "row count does not match scales"
        );
        let cols = rows.first().map_or(0, Vec::len);
        ensure!(
            rows.iter().all(|r| r.len() == cols),
            "ragged coefficient rows"
        );
        let values: Vec<T> = rows.into_iter().flatten().collect();
        ensure!(
            values.iter().all(|v| v.is_finite()),
            "non-finite coefficient"
        );
        Ok(Self {
            values,
            cols,
            scales,
            sample_period,
        })
    }

    pub fn rows(&self) -> usize {
        self.scales.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn scales(&self) -> &ScaleSet {
        &self.scales
    }

    /// Seconds per column.
    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    pub fn with_sample_period(mut self, dt: f64) -> Self {
        self.sample_period = dt;
        self
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.values[r * self.cols + c]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            cols: self.cols,
            scales: self.scales.clone(),
            sample_period: self.sample_period,
        }
    }

    /// Rows `range` as a new matrix.
    pub fn select_rows(&self, range: std::ops::Range<usize>) -> Result<Self> {
        ensure!(
            range.start < range.end && range.end <= self.rows(),
            "row range {range:?} outside 0..{}",
            self.rows()
        );
        Ok(Self {
            values: self.values[range.start * self.cols..range.end * self.cols].to_vec(),
            cols: self.cols,
            scales: ScaleSet(self.scales.0[range].to_vec()),
            sample_period: self.sample_period,
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// `a^(-1/2) psi(m / a)` for integer lags `m` in `[start, start + taps.len())`.
#[derive(Clone, Debug)]
struct Kernel<T> {
    start: isize,
    taps: Vec<T>,
}

impl<T: Scalar> Kernel<T> {
    fn new(table: &Tabulation<T>, scale: f64) -> Self {
        let a = T::lit(scale);
        let first = (table.lower().as_f64() * scale).ceil() as isize;
        let last = (table.upper().as_f64() * scale).floor() as isize;
        let norm = T::one() / a.sqrt();
        let taps = (first..=last)
            .map(|m| norm * table.at(T::lit(m as f64) / a))
            .collect();
        Self { start: first, taps }
    }

    /// Lags that can touch an `n`-sample signal: `[-(n-1), n-1]`.
    fn clipped(&self, n: usize) -> Kernel<T> {
        let lo = self.start.max(-(n as isize - 1));
        let hi = (self.start + self.taps.len() as isize - 1).min(n as isize - 1);
        if lo > hi {
            return Kernel {
                start: 0,
                taps: Vec::new(),
            };
        }
        let from = (lo - self.start) as usize;
        let to = (hi - self.start) as usize;
        Kernel {
            start: lo,
            taps: self.taps[from..=to].to_vec(),
        }
    }
}

/// Sampled kernels for one wavelet over a scale set, reusable across signals.
#[derive(Clone, Debug)]
pub struct CwtPlan<T> {
    wavelet: WaveletSpec,
    scales: ScaleSet,
    kernels: Vec<Kernel<T>>,
}

impl<T: Scalar> CwtPlan<T> {
    pub fn new(wavelet: &WaveletSpec, scales: &ScaleSet) -> Result<Self> {
        let table = Tabulation::<T>::new(wavelet, TABULATION_POINTS)?;
        let kernels = scales
            .as_slice()
            .iter()
            .map(|&a| Kernel::new(&table, a))
            .collect();
        Ok(Self {
            wavelet: wavelet.clone(),
            scales: scales.clone(),
            kernels,
        })
    }

    pub fn wavelet(&self) -> &WaveletSpec {
        &self.wavelet
    }

    pub fn scales(&self) -> &ScaleSet {
        &self.scales
    }

    /// Direct evaluation of the sum, one dot product per coefficient.
    pub fn reference(&self, signal: &[T]) -> Result<CoefficientMatrix<T>> {
        ensure!(!signal.is_empty(), "cannot transform an empty signal");
        let n = signal.len() as isize;
        let rows = self
            .kernels
            .iter()
            .map(|k| {
                let end = k.start + k.taps.len() as isize - 1;
                (0..n)
                    .map(|b| {
                        let t_lo = (b + k.start).max(0);
                        let t_hi = (b + end).min(n - 1);
                        if t_lo > t_hi {
                            return T::zero();
                        }
                        let j = (t_lo - b - k.start) as usize;
                        let len = (t_hi - t_lo + 1) as usize;
                        dot(&signal[t_lo as usize..=t_hi as usize], &k.taps[j..j + len])
                    })
                    .collect()
            })
            .collect();
        CoefficientMatrix::from_rows(rows, self.scales.clone(), 1.0)
    }

    /// Precomputes the FFT-domain kernels for signals of length `n`.
    pub fn fast_for_len(&self, n: usize) -> Result<FastCwt<T>> {
        FastCwt::new(self, n)
    }

    pub fn fast(&self, signal: &[T]) -> Result<CoefficientMatrix<T>> {
        ensure!(!signal.is_empty(), "cannot transform an empty signal");
        self.fast_for_len(signal.len())?.transform(signal)
    }
}

struct FastRow<T> {
    fft_len: usize,
    /// Index into the linear convolution that corresponds to column 0.
    offset: isize,
    /// Spectrum of the time-reversed clipped kernel; `None` when nothing overlaps.
    spectrum: Option<Vec<Complex<T>>>,
}

type FftPair<T> = (Arc<dyn Fft<T>>, Arc<dyn Fft<T>>);

/// FFT-convolution CWT for a fixed signal length.
pub struct FastCwt<T: Scalar> {
    len: usize,
    scales: ScaleSet,
    rows: Vec<FastRow<T>>,
    ffts: HashMap<usize, FftPair<T>>,
}

impl<T: Scalar> FastCwt<T> {
    fn new(plan: &CwtPlan<T>, n: usize) -> Result<Self> {
        ensure!(n >= 1, "signal length must be positive");
        let mut planner = FftPlanner::<T>::new();
        let mut ffts: HashMap<usize, FftPair<T>> = HashMap::new();
        let mut rows = Vec::with_capacity(plan.kernels.len());
        for kernel in &plan.kernels {
            let k = kernel.clipped(n);
            if k.taps.is_empty() {
                rows.push(FastRow {
                    fft_len: 0,
                    offset: 0,
                    spectrum: None,
                });
                continue;
            }
            let klen = k.taps.len();
            let fft_len = (n + klen - 1).next_power_of_two();
            let pair = ffts
                .entry(fft_len)
                .or_insert_with(|| {
                    (
                        planner.plan_fft_forward(fft_len),
                        planner.plan_fft_inverse(fft_len),
                    )
                })
                .clone();
            let mut buf = vec![Complex::new(T::zero(), T::zero()); fft_len];
            for (i, &t) in k.taps.iter().rev().enumerate() {
                buf[i].re = t;
            }
            pair.0.process(&mut buf);
            // column b sits at b + start + klen - 1 of the full linear convolution
            rows.push(FastRow {
                fft_len,
                offset: k.start + klen as isize - 1,
                spectrum: Some(buf),
            });
        }
        Ok(Self {
            len: n,
            scales: plan.scales.clone(),
            rows,
            ffts,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn transform(&self, signal: &[T]) -> Result<CoefficientMatrix<T>> {
        ensure!(
            signal.len() == self.len,
            "plan built for {} samples, got {}",
            self.len,
            signal.len()
        );
        let n = self.len;
        let mut spectra: HashMap<usize, Vec<Complex<T>>> = HashMap::new();
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let Some(kspec) = &row.spectrum else {
                out.push(vec![T::zero(); n]);
                continue;
            };
            let (fwd, inv) = &self.ffts[&row.fft_len];
            let sspec = spectra.entry(row.fft_len).or_insert_with(|| {
                let mut buf = vec![Complex::new(T::zero(), T::zero()); row.fft_len];
                for (b, &x) in buf.iter_mut().zip(signal) {
                    b.re = x;
                }
                fwd.process(&mut buf);
                buf
            });
            let mut prod: Vec<Complex<T>> = sspec.iter().zip(kspec).map(|(a, b)| a * b).collect();
            inv.process(&mut prod);
            let scale = T::one() / T::from_usize_lossy(row.fft_len);
            let coeffs = (0..n)
                .map(|b| {
                    let i = b as isize + row.offset;
                    if (0..row.fft_len as isize).contains(&i) {
                        prod[i as usize].re * scale
                    } else {
                        T::zero()
                    }
                })
                .collect();
            out.push(coeffs);
        }
        CoefficientMatrix::from_rows(out, self.scales.clone(), 1.0)
    }
}

/// Correctness oracle: direct Riemann sum.
pub fn cwt_reference<T: Scalar>(
    signal: &[T],
    wavelet: &WaveletSpec,
    scales: &ScaleSet,
) -> Result<CoefficientMatrix<T>> {
    ensure!(!signal.is_empty(), "cannot transform an empty signal");
    CwtPlan::new(wavelet, scales)?.reference(signal)
}

/// Same contract as [`cwt_reference`], computed by FFT convolution per scale.
pub fn cwt_fast<T: Scalar>(
    signal: &[T],
    wavelet: &WaveletSpec,
    scales: &ScaleSet,
) -> Result<CoefficientMatrix<T>> {
    ensure!(!signal.is_empty(), "cannot transform an empty signal");
    CwtPlan::new(wavelet, scales)?.fast(signal)
}

/// `F_a = F_c / (a * dt)` in Hz.
pub fn pseudo_frequency(wavelet: &WaveletSpec, scale: f64, sample_period: f64) -> Result<f64> {
    ensure!(
        scale > 0.0 && scale.is_finite(),
        "scale must be positive, got {scale}"
    );
    ensure!(
        sample_period > 0.0 && sample_period.is_finite(),
        "sample period must be positive, got {sample_period}"
    );
    Ok(wavelet.center_frequency() / (scale * sample_period))
}

/// `(scale, pseudo-frequency)` pairs, decreasing in frequency.
pub fn scale_curve(
    wavelet: &WaveletSpec,
    scales: &ScaleSet,
    sample_period: f64,
) -> Result<Vec<(f64, f64)>> {
    scales
        .as_slice()
        .iter()
        .map(|&a| Ok((a, pseudo_frequency(wavelet, a, sample_period)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
    }

    #[test]
    fn scale_set_parsing() {
        let s: ScaleSet = "1:50".parse().unwrap();
        assert_eq!(s.len(), 50);
        assert_eq!(s.max(), 50.0);
        let s: ScaleSet = "2:10:2".parse().unwrap();
        assert_eq!(s.as_slice(), &[2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(s.to_string(), "2:10:2");
        let s: ScaleSet = "10,50,100,200".parse().unwrap();
        assert_eq!(s.to_string(), "10,50,100,200");
        assert!("3:1".parse::<ScaleSet>().is_err());
        assert!("0:4".parse::<ScaleSet>().is_err());
        assert!("2,1".parse::<ScaleSet>().is_err());
        assert!("1:2:3:4".parse::<ScaleSet>().is_err());
        assert!("1.5,x".parse::<ScaleSet>().is_err());
        assert_eq!("1:21".parse::<ScaleSet>().unwrap().to_string(), "1:21");
    }

    #[test]
    fn impulse_gives_scaled_wavelet() {
        let spec = WaveletSpec::gaussian(1).unwrap();
        let table = Tabulation::<f64>::new(&spec, TABULATION_POINTS).unwrap();
        let mut x = vec![0.0; 64];
        let k = 30usize;
        x[k] = 1.0;
        let scales = ScaleSet::new(vec![1.0, 2.5, 4.0]).unwrap();
        for m in [
            cwt_reference(&x, &spec, &scales).unwrap(),
            cwt_fast(&x, &spec, &scales).unwrap(),
        ] {
            for (r, &a) in scales.as_slice().iter().enumerate() {
                for b in 0..64 {
                    let want = a.powf(-0.5) * table.at((k as f64 - b as f64) / a);
                    assert!((m.get(r, b) - want).abs() < 1e-12, "a={a} b={b}");
                }
            }
        }
    }

    #[test]
    fn zero_signal_gives_zero_matrix() {
        let m = cwt_fast(
            &[0.0f64; 40],
            &WaveletSpec::morlet(),
            &ScaleSet::up_to(5).unwrap(),
        )
        .unwrap();
        assert!(m.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fast_matches_reference_small() {
        let scales = ScaleSet::new(vec![1.0, 2.0, 4.0]).unwrap();
        for spec in WaveletSpec::all_builtin() {
            let x = random(64, 9);
            let r = cwt_reference(&x, &spec, &scales).unwrap();
            let f = cwt_fast(&x, &spec, &scales).unwrap();
            let diff = r
                .values()
                .iter()
                .zip(f.values())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(diff / r.max_abs() < 1e-6, "{spec}");
        }
    }

    #[test]
    fn huge_scales_and_tiny_signals() {
        // kernel far wider than the signal, and a single-sample signal
        let scales = ScaleSet::new(vec![0.5, 1.0, 300.0]).unwrap();
        for x in [random(1, 1), random(7, 2)] {
            for spec in [WaveletSpec::gaussian(3).unwrap(), WaveletSpec::morlet()] {
                let r = cwt_reference(&x, &spec, &scales).unwrap();
                let f = cwt_fast(&x, &spec, &scales).unwrap();
                for (a, b) in r.values().iter().zip(f.values()) {
                    assert!((a - b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn custom_support_away_from_origin() {
        // support entirely positive, then entirely negative
        for (lo, hi) in [(1.0, 3.0), (-3.0, -1.0)] {
            let grid: Vec<f64> = (0..=20).map(|i| lo + (hi - lo) * i as f64 / 20.0).collect();
            let vals: Vec<f64> = grid.iter().map(|g| (g * 3.0).sin()).collect();
            let spec = WaveletSpec::tabulated("shifted", grid, vals).unwrap();
            let x = random(30, 4);
            let scales = ScaleSet::new(vec![1.0, 3.0, 20.0]).unwrap();
            let r = cwt_reference(&x, &spec, &scales).unwrap();
            let f = cwt_fast(&x, &spec, &scales).unwrap();
            for (a, b) in r.values().iter().zip(f.values()) {
                assert!((a - b).abs() < 1e-12, "{lo}:{hi}");
            }
        }
    }

    #[test]
    fn empty_signal_rejected() {
        let s = ScaleSet::up_to(3).unwrap();
        assert!(cwt_reference::<f64>(&[], &WaveletSpec::morlet(), &s).is_err());
        assert!(cwt_fast::<f64>(&[], &WaveletSpec::morlet(), &s).is_err());
        let plan = CwtPlan::<f64>::new(&WaveletSpec::morlet(), &s).unwrap();
        assert!(plan.fast_for_len(10).unwrap().transform(&[0.0; 9]).is_err());
    }

    #[test]
    fn f32_paths_agree() {
        let x: Vec<f32> = random(256, 5).into_iter().map(|v| v as f32).collect();
        let spec = WaveletSpec::gaussian(4).unwrap();
        let s = ScaleSet::up_to(20).unwrap();
        let r = cwt_reference(&x, &spec, &s).unwrap();
        let f = cwt_fast(&x, &spec, &s).unwrap();
        let diff = r
            .values()
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        assert!(diff / r.max_abs() < 1e-4);
    }

    #[test]
    fn pseudo_frequency_examples() {
        let dt = 2e-9;
        let g1 = WaveletSpec::gaussian(1).unwrap();
        let morl = WaveletSpec::morlet();
        assert_eq!(pseudo_frequency(&g1, 1.0, dt).unwrap(), 100e6);
        assert_eq!(pseudo_frequency(&morl, 1.0, dt).unwrap(), 406.25e6);
        for spec in WaveletSpec::all_builtin() {
            let one = pseudo_frequency(&spec, 1.0, dt).unwrap();
            let two = pseudo_frequency(&spec, 2.0, dt).unwrap();
            assert_eq!(two, one / 2.0);
        }
        assert!(pseudo_frequency(&g1, 0.0, dt).is_err());
        assert!(pseudo_frequency(&g1, 1.0, -dt).is_err());
    }

    #[test]
    fn scale_curve_examples() {
        let dt = 2e-9;
        let s12 = ScaleSet::new(vec![1.0, 2.0]).unwrap();
        let c = scale_curve(&WaveletSpec::morlet(), &s12, dt).unwrap();
        assert!(((c[0].1 - c[1].1) - 203.125e6).abs() < 1.0);
        let c = scale_curve(&WaveletSpec::gaussian(1).unwrap(), &s12, dt).unwrap();
        assert!(((c[0].1 - c[1].1) - 50e6).abs() < 1.0);
        let one = scale_curve(
            &WaveletSpec::mexican_hat(),
            &ScaleSet::new(vec![3.0]).unwrap(),
            dt,
        )
        .unwrap();
        assert_eq!(one.len(), 1);
        let c = scale_curve(
            &WaveletSpec::gaussian(5).unwrap(),
            &ScaleSet::up_to(50).unwrap(),
            dt,
        )
        .unwrap();
        assert!(c.windows(2).all(|w| w[1].1 < w[0].1));
    }

    #[test]
    fn select_rows_keeps_scales() {
        let x = random(32, 1);
        let m = cwt_fast(&x, &WaveletSpec::morlet(), &ScaleSet::up_to(10).unwrap()).unwrap();
        let sub = m.select_rows(2..5).unwrap();
        assert_eq!(sub.scales().as_slice(), &[3.0, 4.0, 5.0]);
        assert_eq!(sub.row(0), m.row(2));
        assert!(m.select_rows(5..11).is_err());
    }
}
