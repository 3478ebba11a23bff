//! Synthetic traces: ideal per-cycle signal plus noise, measurement and device effects.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{AcquisitionMeta, CycleLabel, ProgramLoop, Trace};
use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;

/// Ideal waveform of each clock-cycle class, one clock cycle long.
pub type SignalTemplates<T> = BTreeMap<CycleLabel, Vec<T>>;

/// Built-in template generator.
///
/// Each label gets a sum of `harmonics` sinusoids at distinct integer multiples of the
/// clock frequency drawn from `[lowest_harmonic, highest_harmonic]`. Orders,
/// amplitudes and phases come from a hash of the label mixed with `seed`, so every
/// class is distinct and the set is reproducible.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicTemplates {
    pub harmonics: usize,
    pub lowest_harmonic: usize,
    pub highest_harmonic: usize,
    /// Largest per-harmonic amplitude in volts; each draws from `[0.5, 1] * amplitude`.
    pub amplitude: f64,
    /// Shared clock waveform added to every class (fundamental, volts).
    pub common_amplitude: f64,
    pub seed: u64,
}

impl Default for HarmonicTemplates {
    fn default() -> Self {
        Self {
            harmonics: 3,
            lowest_harmonic: 1,
            highest_harmonic: 8,
            amplitude: 0.1,
            common_amplitude: 0.0,
            seed: 0,
        }
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

impl HarmonicTemplates {
    pub fn band(mut self, lowest: usize, highest: usize) -> Self {
        self.lowest_harmonic = lowest;
        self.highest_harmonic = highest;
        self
    }

    /// One template per label, each `samples_per_cycle` long.
    pub fn build<T: Scalar>(
        &self,
        labels: &[CycleLabel],
        samples_per_cycle: usize,
    ) -> Result<SignalTemplates<T>> {
        ensure!(self.harmonics >= 1, "need at least one harmonic");
        ensure!(
            self.lowest_harmonic >= 1 && self.lowest_harmonic <= self.highest_harmonic,
            "harmonic band [{}, {}] is empty",
            self.lowest_harmonic,
            self.highest_harmonic
        );
        ensure!(
            self.highest_harmonic - self.lowest_harmonic + 1 >= self.harmonics,
            "band holds fewer than {} harmonics",
            self.harmonics
        );
        ensure!(
            2 * self.highest_harmonic < samples_per_cycle,
            "harmonic {} is above Nyquist for {} samples per cycle",
            self.highest_harmonic,
            samples_per_cycle
        );
        ensure!(self.amplitude > 0.0, "amplitude must be positive");

        let n = samples_per_cycle as f64;
        let mut out = BTreeMap::new();
        for label in labels {
            let key = fnv1a(label.to_string().as_bytes()) ^ self.seed.rotate_left(17);
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            let mut orders: Vec<usize> = Vec::with_capacity(self.harmonics);
            while orders.len() < self.harmonics {
                let h = rng.random_range(self.lowest_harmonic..=self.highest_harmonic);
                if !orders.contains(&h) {
                    orders.push(h);
                }
            }
            let terms: Vec<(f64, f64, f64)> = orders
                .into_iter()
                .map(|h| {
                    let amp = self.amplitude * rng.random_range(0.5..=1.0);
                    let phase = rng.random_range(0.0..std::f64::consts::TAU);
                    (h as f64, amp, phase)
                })
                .collect();
            let wave = (0..samples_per_cycle)
                .map(|i| {
                    let x = std::f64::consts::TAU * i as f64 / n;
                    let v: f64 = terms
                        .iter()
                        .map(|&(h, a, p)| a * (h * x + p).sin())
                        .sum::<f64>()
                        + self.common_amplitude * x.sin();
                    T::lit(v)
                })
                .collect();
            out.insert(label.clone(), wave);
        }
        Ok(out)
    }
}

/// Measurement model parameters: templates plus noise, measurement and device terms.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceModelParams<T> {
    pub templates: SignalTemplates<T>,
    /// Standard deviation of additive Gaussian noise, volts.
    pub noise_sigma: f64,
    /// Quantization step in volts; 0 disables.
    pub measurement_quant_step: f64,
    /// Relative gain error of the measurement chain.
    pub measurement_gain_error: f64,
    /// Amplitude of the slow multiplicative drift across the trace.
    pub device_drift_amplitude: f64,
    pub seed: u64,
}

impl<T: Scalar> TraceModelParams<T> {
    pub fn noiseless(templates: SignalTemplates<T>) -> Self {
        Self {
            templates,
            noise_sigma: 0.0,
            measurement_quant_step: 0.0,
            measurement_gain_error: 0.0,
            device_drift_amplitude: 0.0,
            seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma;
        self.seed = seed;
        self
    }

    fn validate(&self, samples_per_cycle: usize) -> Result<()> {
        ensure!(
            self.noise_sigma.is_finite() && self.noise_sigma >= 0.0,
            "noise sigma must be >= 0"
        );
        ensure!(
            self.measurement_quant_step.is_finite() && self.measurement_quant_step >= 0.0,
            "quantization step must be >= 0"
        );
        ensure!(
            self.measurement_gain_error.abs() < 1.0,
            "gain error must be in (-1, 1)"
        );
        ensure!(
            self.device_drift_amplitude.is_finite() && self.device_drift_amplitude >= 0.0,
            "drift amplitude must be >= 0"
        );
        for (label, t) in &self.templates {
            ensure!(
                t.len() == samples_per_cycle,
                "template {label} has {} samples, expected {samples_per_cycle}",
                t.len()
            );
        }
        Ok(())
    }

    /// Root-mean-square of the ideal signal over one loop.
    pub fn loop_rms(&self, program: &ProgramLoop) -> Result<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for label in program.cycle_labels() {
            let t = self.template(&label)?;
            sum += t.iter().map(|v| v.as_f64().powi(2)).sum::<f64>();
            count += t.len();
        }
        Ok((sum / count as f64).sqrt())
    }

    fn template(&self, label: &CycleLabel) -> Result<&[T]> {
        self.templates
            .get(label)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::MissingTemplate {
                mnemonic: label.mnemonic.clone(),
                cycle: label.cycle,
            })
    }
}

/// Generates `n_loops` executions of `program` under the measurement model.
///
/// The ideal signal is scaled by a one-period sinusoidal drift spanning the trace,
/// Gaussian noise is added, then the gain error and quantization of the measurement
/// chain are applied. Deterministic for a given seed.
pub fn synthesize_trace<T: Scalar>(
    program: &ProgramLoop,
    params: &TraceModelParams<T>,
    n_loops: usize,
    meta: AcquisitionMeta,
) -> Result<Trace<T>> {
    ensure!(n_loops >= 1, "need at least one loop");
    let spc = meta.samples_per_cycle();
    params.validate(spc)?;
    let sequence: Vec<&[T]> = program
        .cycle_labels()
        .iter()
        .map(|l| params.template(l))
        .collect::<Result<_>>()?;

    let total = n_loops * sequence.len() * spc;
    let mut samples = Vec::with_capacity(total);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let noise = Normal::new(0.0, params.noise_sigma)
        .map_err(|e| Error::invalid(format!("noise distribution: {e}")))?;
    let gain = 1.0 + params.measurement_gain_error;
    let q = params.measurement_quant_step;
    let d = params.device_drift_amplitude;
    let mut n = 0usize;
    for _ in 0..n_loops {
        for template in &sequence {
            for &s in template.iter() {
                let mut v = s.as_f64();
                if d > 0.0 {
                    v *= 1.0 + d * (std::f64::consts::TAU * n as f64 / total as f64).sin();
                }
                if params.noise_sigma > 0.0 {
                    v += noise.sample(&mut rng);
                }
                v *= gain;
                if q > 0.0 {
                    v = (v / q).round() * q;
                }
                samples.push(T::lit(v));
                n += 1;
            }
        }
    }
    Trace::new(samples, meta)
}
