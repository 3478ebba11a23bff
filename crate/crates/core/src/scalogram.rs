//! Coefficient matrices to colormapped images, and binary PGM/PPM files.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cwt::{CoefficientMatrix, ScaleSet};
use crate::error::{ensure, Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizeMode {
    /// Min/max of this matrix; a constant matrix maps to 0.5.
    PerWindow,
    /// Clamp to `[min, max]` then scale.
    Global { min: f64, max: f64 },
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormalizeMode::PerWindow => f.write_str("per-window"),
            NormalizeMode::Global { min, max } => write!(f, "global:{min}:{max}"),
        }
    }
}

/// `per-window` or `global:MIN:MAX`.
impl FromStr for NormalizeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "per-window" {
            return Ok(NormalizeMode::PerWindow);
        }
        let parts: Vec<&str> = s.split(':').collect();
        if let ["global", lo, hi] = parts.as_slice() {
            let parse = |v: &str| {
                v.parse::<f64>()
                    .map_err(|_| Error::invalid(format!("bad bound {v:?} in {s:?}")))
            };
            let mode = NormalizeMode::Global {
                min: parse(lo)?,
                max: parse(hi)?,
            };
            mode.check()?;
            return Ok(mode);
        }
        Err(Error::invalid(format!(
            "normalization {s:?} is not `per-window` or `global:MIN:MAX`"
        )))
    }
}

impl NormalizeMode {
    fn check(&self) -> Result<()> {
        if let NormalizeMode::Global { min, max } = *self {
            ensure!(
                min.is_finite() && max.is_finite() && min < max,
                "global normalization needs min < max, got [{min}, {max}]"
            );
        }
        Ok(())
    }
}

/// Maps coefficients into `[0, 1]`.
pub fn normalize<T: Scalar>(
    c: &CoefficientMatrix<T>,
    mode: NormalizeMode,
) -> Result<CoefficientMatrix<T>> {
    mode.check()?;
    match mode {
        NormalizeMode::PerWindow => {
            let (lo, hi) = c
                .values()
                .iter()
                .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            let range = hi - lo;
            if range.is_nan() || range <= T::zero() {
                return Ok(c.map(|_| T::lit(0.5)));
            }
            Ok(c.map(|v| (v - lo) / range))
        }
        NormalizeMode::Global { min, max } => {
            let (lo, hi) = (T::lit(min), T::lit(max));
            Ok(c.map(|v| (v.max(lo).min(hi) - lo) / (hi - lo)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColormapClass {
    Sequential,
    Diverging,
    Cyclic,
    Qualitative,
    Grayscale,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    Linear,
    /// Color of the nearest control point at or below the value.
    Discrete,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub position: f64,
    pub rgb: [u8; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Colormap {
    name: String,
    class: ColormapClass,
    points: Vec<ControlPoint>,
    interpolation: Interpolation,
}

/// Names of the built-in maps, one per class.
pub const BUILTIN_COLORMAPS: [&str; 5] = [
    "grayscale",
    "sequential",
    "diverging",
    "cyclic",
    "qualitative",
];

const fn cp(position: f64, rgb: [u8; 3]) -> ControlPoint {
    ControlPoint { position, rgb }
}

impl Colormap {
    pub fn new(
        name: &str,
        class: ColormapClass,
        points: Vec<ControlPoint>,
        interpolation: Interpolation,
    ) -> Result<Self> {
        ensure!(
            points.len() >= 2,
            "colormap {name} needs at least two control points"
        );
        ensure!(
            points[0].position == 0.0 && points[points.len() - 1].position == 1.0,
            "colormap {name} must span [0, 1]"
        );
        ensure!(
            points.windows(2).all(|w| w[0].position < w[1].position),
            "colormap {name} positions must be strictly increasing"
        );
        ensure!(
            class != ColormapClass::Qualitative || interpolation == Interpolation::Discrete,
            "qualitative colormap {name} must be discrete"
        );
        Ok(Self {
            name: name.to_string(),
            class,
            points,
            interpolation,
        })
    }

    pub fn grayscale() -> Self {
        Self::new(
            "grayscale",
            ColormapClass::Grayscale,
            vec![cp(0.0, [0, 0, 0]), cp(1.0, [255, 255, 255])],
            Interpolation::Linear,
        )
        .expect("valid builtin")
    }

    /// Dark to light, monotone in luminance.
    pub fn sequential() -> Self {
        Self::new(
            "sequential",
            ColormapClass::Sequential,
            vec![
                cp(0.0, [0, 0, 4]),
                cp(1.0 / 3.0, [120, 28, 109]),
                cp(2.0 / 3.0, [237, 105, 37]),
                cp(1.0, [252, 255, 164]),
            ],
            Interpolation::Linear,
        )
        .expect("valid builtin")
    }

    /// Blue through white to red.
    pub fn diverging() -> Self {
        Self::new(
            "diverging",
            ColormapClass::Diverging,
            vec![
                cp(0.0, [59, 76, 192]),
                cp(0.5, [255, 255, 255]),
                cp(1.0, [180, 4, 38]),
            ],
            Interpolation::Linear,
        )
        .expect("valid builtin")
    }

    /// Returns to its starting color.
    pub fn cyclic() -> Self {
        Self::new(
            "cyclic",
            ColormapClass::Cyclic,
            vec![
                cp(0.0, [226, 217, 226]),
                cp(1.0 / 3.0, [94, 67, 161]),
                cp(2.0 / 3.0, [128, 30, 60]),
                cp(1.0, [226, 217, 226]),
            ],
            Interpolation::Linear,
        )
        .expect("valid builtin")
    }

    /// Eight equal bins with unordered hues.
    pub fn qualitative() -> Self {
        const COLORS: [[u8; 3]; 8] = [
            [31, 119, 180],
            [255, 127, 14],
            [44, 160, 44],
            [214, 39, 40],
            [148, 103, 189],
            [140, 86, 75],
            [227, 119, 194],
            [127, 127, 127],
        ];
        let mut points: Vec<ControlPoint> = COLORS
            .iter()
            .enumerate()
            .map(|(i, &c)| cp(i as f64 / 8.0, c))
            .collect();
        points.push(cp(1.0, COLORS[7]));
        Self::new(
            "qualitative",
            ColormapClass::Qualitative,
            points,
            Interpolation::Discrete,
        )
        .expect("valid builtin")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "grayscale" | "gray" | "grey" => Ok(Self::grayscale()),
            "sequential" => Ok(Self::sequential()),
            "diverging" => Ok(Self::diverging()),
            "cyclic" => Ok(Self::cyclic()),
            "qualitative" => Ok(Self::qualitative()),
            other => Err(Error::invalid(format!(
                "unknown colormap {other:?}; expected one of {}",
                BUILTIN_COLORMAPS.join(", ")
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> ColormapClass {
        self.class
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn channels(&self) -> usize {
        if self.class == ColormapClass::Grayscale {
            1
        } else {
            3
        }
    }

    /// Color for `v` in `[0, 1]`.
    pub fn rgb(&self, v: f64) -> Result<[u8; 3]> {
        ensure!((0.0..=1.0).contains(&v), "value {v} outside [0, 1]");
        let pts = &self.points;
        // last control point at or below v
        let i = pts.partition_point(|p| p.position <= v).saturating_sub(1);
        if self.interpolation == Interpolation::Discrete || i + 1 == pts.len() {
            return Ok(pts[i].rgb);
        }
        let (a, b) = (pts[i], pts[i + 1]);
        let w = (v - a.position) / (b.position - a.position);
        let mut out = [0u8; 3];
        for (ch, o) in out.iter_mut().enumerate() {
            let (x, y) = (f64::from(a.rgb[ch]), f64::from(b.rgb[ch]));
            *o = (x + w * (y - x)).round().clamp(0.0, 255.0) as u8;
        }
        Ok(out)
    }
}

impl fmt::Display for Colormap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// 8-bit raster, row-major, channels interleaved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self> {
        ensure!(width >= 1 && height >= 1, "image must be at least 1x1");
        ensure!(
            channels == 1 || channels == 3,
            "images have 1 or 3 channels"
        );
        ensure!(
            pixels.len() == width * height * channels,
            "pixel buffer has {} bytes, expected {}",
            pixels.len(),
            width * height * channels
        );
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.pixels[i..i + self.channels]
    }
}

/// A colormapped coefficient matrix: one row per scale, one column per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct Scalogram {
    pub image: Image,
    pub source_scales: ScaleSet,
}

impl Scalogram {
    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    pub fn channels(&self) -> usize {
        self.image.channels
    }

    /// Pixels scaled to `[0, 1]`.
    pub fn features<T: Scalar>(&self) -> Vec<T> {
        let k = T::one() / T::lit(255.0);
        self.image
            .pixels
            .iter()
            .map(|&p| T::lit(f64::from(p)) * k)
            .collect()
    }
}

/// Colors a normalized matrix; grayscale yields one channel, other maps three.
pub fn apply_colormap<T: Scalar>(
    normalized: &CoefficientMatrix<T>,
    cmap: &Colormap,
) -> Result<Scalogram> {
    let channels = cmap.channels();
    let mut pixels = Vec::with_capacity(normalized.values().len() * channels);
    for &v in normalized.values() {
        let v = v.as_f64();
        if channels == 1 {
            ensure!((0.0..=1.0).contains(&v), "value {v} outside [0, 1]");
            pixels.push((v * 255.0).round() as u8);
        } else {
            pixels.extend_from_slice(&cmap.rgb(v)?);
        }
    }
    Ok(Scalogram {
        image: Image::new(normalized.cols(), normalized.rows(), channels, pixels)?,
        source_scales: normalized.scales().clone(),
    })
}

/// Nearest-neighbor resampling: target pixel `k` reads source `floor(k * src / dst)`.
pub fn resize(s: &Scalogram, width: usize, height: usize) -> Result<Scalogram> {
    ensure!(
        width >= 1 && height >= 1,
        "resize target must be at least 1x1"
    );
    let src = &s.image;
    let ch = src.channels;
    let mut pixels = Vec::with_capacity(width * height * ch);
    for y in 0..height {
        let sy = y * src.height / height;
        for x in 0..width {
            let sx = x * src.width / width;
            pixels.extend_from_slice(src.pixel(sx, sy));
        }
    }
    Ok(Scalogram {
        image: Image::new(width, height, ch, pixels)?,
        source_scales: s.source_scales.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// Binary graymap, `P5`.
    Pgm,
    /// Binary pixmap, `P6`.
    Ppm,
}

impl ImageFormat {
    pub fn for_channels(channels: usize) -> Self {
        if channels == 1 {
            ImageFormat::Pgm
        } else {
            ImageFormat::Ppm
        }
    }
}

/// `P5`/`P6` header with maxval 255 followed by raw bytes.
pub fn encode_pnm(image: &Image, format: ImageFormat) -> Result<Vec<u8>> {
    let magic = match (format, image.channels) {
        (ImageFormat::Pgm, 1) => "P5",
        (ImageFormat::Ppm, 3) => "P6",
        (f, c) => {
            return Err(Error::invalid(format!(
                "{f:?} cannot hold {c}-channel pixels"
            )))
        }
    };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    Ok(out)
}

pub fn write_image(s: &Scalogram, path: &Path, format: ImageFormat) -> Result<()> {
    let bytes = encode_pnm(&s.image, format)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Parses binary PGM/PPM with maxval 255 (header comments allowed).
pub fn decode_pnm(bytes: &[u8], origin: &Path) -> Result<Image> {
    let err = |offset: usize, msg: &str| Error::ParseBytes {
        path: origin.to_path_buf(),
        offset,
        msg: msg.to_string(),
    };
    let mut pos = 0;
    let token = |pos: &mut usize| -> Result<String> {
        loop {
            while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
                *pos += 1;
            }
            if *pos < bytes.len() && bytes[*pos] == b'#' {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
                continue;
            }
            break;
        }
        let start = *pos;
        while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if start == *pos {
            return Err(err(start, "truncated header"));
        }
        Ok(String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
    };
    let channels = match token(&mut pos)?.as_str() {
        "P5" => 1,
        "P6" => 3,
        _ => return Err(err(0, "not a binary PGM/PPM")),
    };
    let number = |pos: &mut usize| -> Result<usize> {
        let at = *pos;
        token(pos)?
            .parse()
            .map_err(|_| err(at, "bad header number"))
    };
    let width = number(&mut pos)?;
    let height = number(&mut pos)?;
    let maxval = number(&mut pos)?;
    if maxval != 255 {
        return Err(err(pos, "only maxval 255 is supported"));
    }
    // exactly one whitespace byte separates the header from the raster
    pos += 1;
    let expected = width * height * channels;
    if bytes.len() < pos || bytes.len() - pos != expected {
        return Err(err(pos, "raster size does not match header"));
    }
    Image::new(width, height, channels, bytes[pos..].to_vec())
}

pub fn read_image(path: &Path) -> Result<Image> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&bytes, path)
}

/// Options for turning coefficients into classifier-ready scalograms.
#[derive(Clone, Debug, PartialEq)]
pub struct RenderOptions {
    pub normalize: NormalizeMode,
    /// Take magnitudes before normalizing.
    pub absolute: bool,
    pub colormap: Colormap,
    /// `(width, height)` target for nearest-neighbor resizing.
    pub resize: Option<(usize, usize)>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            normalize: NormalizeMode::PerWindow,
            absolute: false,
            colormap: Colormap::grayscale(),
            resize: None,
        }
    }
}

/// normalize -> colormap -> resize.
pub fn render<T: Scalar>(c: &CoefficientMatrix<T>, opts: &RenderOptions) -> Result<Scalogram> {
    let normalized = if opts.absolute {
        normalize(&c.map(|v| v.abs()), opts.normalize)?
    } else {
        normalize(c, opts.normalize)?
    };
    let s = apply_colormap(&normalized, &opts.colormap)?;
    match opts.resize {
        Some((w, h)) => resize(&s, w, h),
        None => Ok(s),
    }
}
