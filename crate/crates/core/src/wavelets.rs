//! Real mother wavelets and their attributes.
//!
//! Gaussian derivatives follow the `(-1)^N d^N/dx^N exp(-x^2)` convention and are
//! L2-normalized on the sampling grid. The Mexican hat and the real Morlet use their
//! closed forms unchanged.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;
use crate::spectral::{dft, fft};

/// Number of points in the tabulation the transforms interpolate.
pub const TABULATION_POINTS: usize = 1 << 12;

/// Resolution exponent used for the stored center frequency.
pub const DEFAULT_RESOLUTION_EXPONENT: u32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Symmetric,
    AntiSymmetric,
    /// Only custom wavelets can be neither.
    Asymmetric,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::Symmetric => "symmetric",
            Symmetry::AntiSymmetric => "anti-sym.",
            Symmetry::Asymmetric => "asymmetric",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WaveletKind {
    /// Derivative order 1..=8 of the Gaussian.
    GaussianDerivative(u8),
    MexicanHat,
    Morlet,
    /// Custom mother wavelet given as `(x, psi)` samples, linearly interpolated.
    Tabulated(Arc<(Vec<f64>, Vec<f64>)>),
}

/// A mother wavelet with its support and attributes.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletSpec {
    name: String,
    kind: WaveletKind,
    lower_bound: f64,
    upper_bound: f64,
    symmetry: Symmetry,
    center_frequency: f64,
}

/// Names of the ten built-in wavelets, in table order.
pub const BUILTIN_NAMES: [&str; 10] = [
    "gaus1", "gaus2", "gaus3", "gaus4", "gaus5", "gaus6", "gaus7", "gaus8", "mexh", "morl",
];

/// Physicists' Hermite polynomial via the three-term recurrence.
fn hermite<T: Scalar>(order: u8, x: T) -> T {
    let two = T::lit(2.0);
    let mut prev = T::one();
    if order == 0 {
        return prev;
    }
    let mut cur = two * x;
    for n in 1..order {
        let next = two * x * cur - two * T::lit(f64::from(n)) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

impl WaveletSpec {
    fn with_kind(
        name: &str,
        kind: WaveletKind,
        lower: f64,
        upper: f64,
        symmetry: Symmetry,
    ) -> Self {
        let mut spec = Self {
            name: name.to_string(),
            kind,
            lower_bound: lower,
            upper_bound: upper,
            symmetry,
            center_frequency: 0.0,
        };
        spec.center_frequency = center_frequency(&spec, DEFAULT_RESOLUTION_EXPONENT);
        spec
    }

    pub fn gaussian(order: u8) -> Result<Self> {
        ensure!(
            (1..=8).contains(&order),
            "gaussian derivative order {order} not in 1..=8"
        );
        let symmetry = if order % 2 == 1 {
            Symmetry::AntiSymmetric
        } else {
            Symmetry::Symmetric
        };
        Ok(Self::with_kind(
            &format!("gaus{order}"),
            WaveletKind::GaussianDerivative(order),
            -5.0,
            5.0,
            symmetry,
        ))
    }

    pub fn mexican_hat() -> Self {
        Self::with_kind(
            "mexh",
            WaveletKind::MexicanHat,
            -8.0,
            8.0,
            Symmetry::Symmetric,
        )
    }

    pub fn morlet() -> Self {
        Self::with_kind("morl", WaveletKind::Morlet, -8.0, 8.0, Symmetry::Symmetric)
    }

    /// A custom wavelet from samples on a strictly increasing grid.
    pub fn tabulated(name: &str, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure!(grid.len() >= 2, "custom wavelet needs at least two samples");
        ensure!(grid.len() == values.len(), "grid and value lengths differ");
        ensure!(
            grid.iter().chain(&values).all(|v| v.is_finite()),
            "custom wavelet has non-finite samples"
        );
        ensure!(
            grid.windows(2).all(|w| w[0] < w[1]),
            "custom wavelet grid must be strictly increasing"
        );
        let (lower, upper) = (grid[0], grid[grid.len() - 1]);
        let mut spec = Self::with_kind(
            name,
            WaveletKind::Tabulated(Arc::new((grid, values))),
            lower,
            upper,
            Symmetry::Asymmetric,
        );
        spec.symmetry = symmetry_check(&spec).unwrap_or(Symmetry::Asymmetric);
        Ok(spec)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "mexh" => Ok(Self::mexican_hat()),
            "morl" => Ok(Self::morlet()),
            _ => match name.strip_prefix("gaus").and_then(|o| o.parse::<u8>().ok()) {
                Some(order) if (1..=8).contains(&order) => Self::gaussian(order),
                _ => Err(Error::invalid(format!(
                    "unknown wavelet {name:?}; expected one of {}",
                    BUILTIN_NAMES.join(", ")
                ))),
            },
        }
    }

    /// The ten built-ins in table order.
    pub fn all_builtin() -> Vec<Self> {
        BUILTIN_NAMES
            .iter()
            .map(|n| Self::by_name(n).expect("builtin name"))
            .collect()
    }

    /// Parses `all` or a comma-separated list of names.
    pub fn parse_list(list: &str) -> Result<Vec<Self>> {
        if list.trim() == "all" {
            return Ok(Self::all_builtin());
        }
        list.split(',').map(|n| Self::by_name(n.trim())).collect()
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &WaveletKind {
        &self.kind
    }

    pub fn family(&self) -> &'static str {
        match self.kind {
            WaveletKind::GaussianDerivative(_) => "Gaussian",
            WaveletKind::MexicanHat => "Mexican Hat",
            WaveletKind::Morlet => "Morlet",
            WaveletKind::Tabulated(_) => "Custom",
        }
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn upper_bound(&self) -> f64 {
        self.upper_bound
    }

    pub fn support_width(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }

    /// Declared symmetry (the built-ins carry the tabulated attribute).
    pub fn symmetry(&self) -> Symmetry {
        self.symmetry
    }

    /// Center frequency in Hz at the default resolution.
    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    /// Unnormalized closed form; zero outside the support for tabulated wavelets.
    fn raw<T: Scalar>(&self, x: T) -> T {
        match &self.kind {
            WaveletKind::GaussianDerivative(order) => hermite(*order, x) * (-x * x).exp(),
            WaveletKind::MexicanHat => {
                let c = T::lit(2.0) / (T::lit(3.0).sqrt() * T::PI().powf(T::lit(0.25)));
                c * (T::one() - x * x) * (-x * x / T::lit(2.0)).exp()
            }
            WaveletKind::Morlet => (-x * x / T::lit(2.0)).exp() * (T::lit(5.0) * x).cos(),
            WaveletKind::Tabulated(table) => {
                let (grid, values) = (&table.0, &table.1);
                let xf = x.as_f64();
                if xf < grid[0] || xf > grid[grid.len() - 1] {
                    return T::zero();
                }
                let hi = grid.partition_point(|g| *g < xf).clamp(1, grid.len() - 1);
                let (x0, x1) = (grid[hi - 1], grid[hi]);
                let w = (xf - x0) / (x1 - x0);
                T::lit(values[hi - 1] * (1.0 - w) + values[hi] * w)
            }
        }
    }
}

impl fmt::Display for WaveletSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// `n_points` evenly spaced abscissae over the support, both ends included.
pub fn support_grid<T: Scalar>(spec: &WaveletSpec, n_points: usize) -> Vec<T> {
    let lo = T::lit(spec.lower_bound);
    let span = T::lit(spec.support_width());
    let last = T::from_usize_lossy(n_points - 1);
    (0..n_points)
        .map(|i| lo + span * T::from_usize_lossy(i) / last)
        .collect()
}

/// Samples the mother wavelet at `n_points` over its support.
pub fn eval_wavelet<T: Scalar>(spec: &WaveletSpec, n_points: usize) -> Result<(Vec<T>, Vec<T>)> {
    ensure!(n_points >= 2, "need at least two points, got {n_points}");
    let grid = support_grid::<T>(spec, n_points);
    let mut values: Vec<T> = grid.iter().map(|&x| spec.raw(x)).collect();
    if let WaveletKind::GaussianDerivative(_) = spec.kind {
        let dx = T::lit(spec.support_width()) / T::from_usize_lossy(n_points - 1);
        let norm = (values.iter().map(|&v| v * v).sum::<T>() * dx).sqrt();
        for v in &mut values {
            *v /= norm;
        }
    }
    Ok((grid, values))
}

/// `sqrt(sum psi^2 dx)` of a sampled wavelet.
pub fn l2_norm<T: Scalar>(spec: &WaveletSpec, n_points: usize) -> Result<T> {
    let (_, v) = eval_wavelet::<T>(spec, n_points)?;
    let dx = T::lit(spec.support_width()) / T::from_usize_lossy(n_points - 1);
    Ok((v.iter().map(|&x| x * x).sum::<T>() * dx).sqrt())
}

/// Dominant DFT bin of the wavelet sampled at `2^p` points, divided by the support width.
pub fn center_frequency(spec: &WaveletSpec, resolution_exponent: u32) -> f64 {
    let n = 1usize << resolution_exponent;
    let (_, values) = eval_wavelet::<f64>(spec, n).expect("n >= 2");
    let spectrum = fft(&values, 1.0).expect("non-empty");
    peak_bin(&spectrum.magnitudes()) as f64 / spec.support_width()
}

/// Same procedure with the literal DFT; used to cross-check the fast path.
pub fn center_frequency_dft(spec: &WaveletSpec, resolution_exponent: u32) -> f64 {
    let n = 1usize << resolution_exponent;
    let (_, values) = eval_wavelet::<f64>(spec, n).expect("n >= 2");
    let spectrum = dft(&values, 1.0).expect("non-empty");
    peak_bin(&spectrum.magnitudes()) as f64 / spec.support_width()
}

/// Index of the largest magnitude among bins `1..=n/2`; the lowest index wins ties.
fn peak_bin(magnitudes: &[f64]) -> usize {
    let half = magnitudes.len() / 2;
    let mut best = 1.min(half);
    for k in 1..=half {
        if magnitudes[k] > magnitudes[best] {
            best = k;
        }
    }
    best
}

/// `|sum psi dx| / sum |psi| dx` on a 2^12-point grid.
pub fn zero_mean_defect(spec: &WaveletSpec) -> f64 {
    let (_, v) = eval_wavelet::<f64>(spec, TABULATION_POINTS).expect("n >= 2");
    let signed: f64 = v.iter().sum();
    let abs: f64 = v.iter().map(|x| x.abs()).sum();
    signed.abs() / abs
}

/// Classifies the wavelet by comparing `psi(x)` with `psi(-x)` over its grid.
pub fn symmetry_check(spec: &WaveletSpec) -> Result<Symmetry> {
    let grid = support_grid::<f64>(spec, TABULATION_POINTS);
    let scale = grid.iter().map(|&x| spec.raw(x).abs()).fold(0.0, f64::max);
    let tol = 1e-9 * scale.max(f64::MIN_POSITIVE);
    let mut symmetric = true;
    let mut anti = true;
    for &x in &grid {
        let (a, b) = (spec.raw(x), spec.raw(-x));
        symmetric &= (a - b).abs() <= tol;
        anti &= (a + b).abs() <= tol;
        if !symmetric && !anti {
            return Err(Error::invalid(format!(
                "{} is neither symmetric nor anti-symmetric",
                spec.name
            )));
        }
    }
    Ok(if symmetric {
        Symmetry::Symmetric
    } else {
        Symmetry::AntiSymmetric
    })
}

/// Linear-interpolation lookup table of a mother wavelet.
#[derive(Clone, Debug)]
pub struct Tabulation<T> {
    lower: T,
    upper: T,
    inv_step: T,
    values: Vec<T>,
}

impl<T: Scalar> Tabulation<T> {
    pub fn new(spec: &WaveletSpec, n_points: usize) -> Result<Self> {
        let (_, values) = eval_wavelet::<T>(spec, n_points)?;
        let lower = T::lit(spec.lower_bound);
        let upper = T::lit(spec.upper_bound);
        Ok(Self {
            lower,
            upper,
            inv_step: T::from_usize_lossy(n_points - 1) / (upper - lower),
            values,
        })
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    /// Interpolated value; zero outside the support.
    #[inline]
    pub fn at(&self, x: T) -> T {
        if x < self.lower || x > self.upper {
            return T::zero();
        }
        let pos = (x - self.lower) * self.inv_step;
        let last = self.values.len() - 1;
        let i = pos.floor().to_usize().unwrap_or(0).min(last - 1);
        let w = pos - T::from_usize_lossy(i);
        self.values[i] * (T::one() - w) + self.values[i + 1] * w
    }
}
