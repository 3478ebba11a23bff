//! Wall-clock timing of coefficient calculation and least-squares fits of time vs scale.

use std::fmt;
use std::hint::black_box;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cwt::{CwtPlan, ScaleSet};
use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;
use crate::wavelets::WaveletSpec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CwtPath {
    /// Direct sums; cost grows linearly with the largest scale.
    #[default]
    Reference,
    Fast,
}

impl fmt::Display for CwtPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CwtPath::Reference => "reference",
            CwtPath::Fast => "fast",
        })
    }
}

impl FromStr for CwtPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(CwtPath::Reference),
            "fast" => Ok(CwtPath::Fast),
            _ => Err(Error::invalid(format!(
                "unknown path {s:?}, expected reference or fast"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub max_scales: Vec<usize>,
    pub n_windows: usize,
    pub window_length: usize,
    pub trials: usize,
    pub path: CwtPath,
    pub seed: u64,
    /// Spread windows over the rayon pool; timings then depend on core count and load.
    pub parallel: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub wavelet: String,
    pub max_scale: usize,
    pub n_windows: usize,
    pub trial: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
}

impl BenchResult {
    pub fn for_wavelet(&self, name: &str) -> Vec<&BenchRow> {
        self.rows.iter().filter(|r| r.wavelet == name).collect()
    }

    /// `(max_scale, mean, min)` seconds for one wavelet, by ascending scale.
    pub fn summary(&self, name: &str) -> Vec<(usize, f64, f64)> {
        let mut scales: Vec<usize> = self.for_wavelet(name).iter().map(|r| r.max_scale).collect();
        scales.sort_unstable();
        scales.dedup();
        scales
            .into_iter()
            .map(|s| {
                let t: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.wavelet == name && r.max_scale == s)
                    .map(|r| r.seconds)
                    .collect();
                let mean = t.iter().sum::<f64>() / t.len() as f64;
                (s, mean, t.iter().copied().fold(f64::INFINITY, f64::min))
            })
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("wavelet,max_scale,n_windows,trial,seconds\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.wavelet, r.max_scale, r.n_windows, r.trial, r.seconds
            ));
        }
        out
    }
}

/// Seeded standard-normal windows shared by every timing cell.
pub fn bench_windows<T: Scalar>(n_windows: usize, window_length: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_windows)
        .map(|_| {
            (0..window_length)
                .map(|_| T::lit(StandardNormal.sample(&mut rng)))
                .collect()
        })
        .collect()
}

fn run_once<T: Scalar>(
    plan: &CwtPlan<T>,
    path: CwtPath,
    windows: &[Vec<T>],
    parallel: bool,
) -> Result<T> {
    let fast = match path {
        CwtPath::Reference => None,
        CwtPath::Fast => Some(plan.fast_for_len(windows[0].len())?),
    };
    let one = |w: &Vec<T>| -> Result<T> {
        let m = match &fast {
            None => plan.reference(black_box(w))?,
            Some(f) => f.transform(black_box(w))?,
        };
        Ok(m.values()[0])
    };
    if parallel {
        windows
            .par_iter()
            .map(one)
            .try_reduce(T::zero, |a, b| Ok(a + b))
    } else {
        windows.iter().map(one).sum()
    }
}

/// Times the CWT over scales `1..=S` for every `S` in the config.
pub fn time_cwt<T: Scalar>(wavelets: &[WaveletSpec], cfg: &BenchConfig) -> Result<BenchResult> {
    ensure!(!wavelets.is_empty(), "no wavelets to benchmark");
    ensure!(!cfg.max_scales.is_empty(), "no scales to benchmark");
    ensure!(
        cfg.max_scales.iter().all(|&s| s >= 1),
        "max scale must be at least 1"
    );
    ensure!(cfg.trials >= 1, "need at least one trial");
    ensure!(
        cfg.n_windows >= 1 && cfg.window_length >= 1,
        "empty benchmark input"
    );
    let windows = bench_windows::<T>(cfg.n_windows, cfg.window_length, cfg.seed);
    let mut rows = Vec::new();
    for w in wavelets {
        for &s in &cfg.max_scales {
            let plan = CwtPlan::<T>::new(w, &ScaleSet::up_to(s)?)?;
            black_box(run_once(&plan, cfg.path, &windows[..1], cfg.parallel)?);
            for trial in 0..cfg.trials {
                let start = Instant::now();
                black_box(run_once(&plan, cfg.path, &windows, cfg.parallel)?);
                let seconds = start.elapsed().as_secs_f64().max(f64::MIN_POSITIVE);
                rows.push(BenchRow {
                    wavelet: w.name().to_string(),
                    max_scale: s,
                    n_windows: cfg.n_windows,
                    trial,
                    seconds,
                });
            }
        }
    }
    Ok(BenchResult { rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Least squares through `(x, y)`; R² is 0 when `y` has no variance.
pub fn fit_points(points: &[(f64, f64)]) -> Result<LinearFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    ensure!(
        xs.len() >= 3,
        "linear fit needs at least 3 distinct x values, got {}",
        xs.len()
    );
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        0.0
    } else {
        let ss_res: f64 = points
            .iter()
            .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
            .sum();
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Fit of mean time against max scale for one wavelet.
pub fn fit_linear(result: &BenchResult, wavelet: &str) -> Result<LinearFit> {
    let points: Vec<(f64, f64)> = result
        .summary(wavelet)
        .into_iter()
        .map(|(s, mean, _)| (s as f64, mean))
        .collect();
    fit_points(&points)
}

/// One line per wavelet: `wavelet,slope,intercept,r_squared`.
pub fn fit_csv(result: &BenchResult, wavelets: &[WaveletSpec]) -> Result<String> {
    let mut out = String::from("wavelet,slope,intercept,r_squared\n");
    for w in wavelets {
        let f = fit_linear(result, w.name())?;
        out.push_str(&format!(
            "{},{},{},{}\n",
            w.name(),
            f.slope,
            f.intercept,
            f.r_squared
        ));
    }
    Ok(out)
}
