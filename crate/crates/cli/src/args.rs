use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cwtsca_core::bench::CwtPath;
use cwtsca_core::classify::LabelMode;
use cwtsca_core::cwt::ScaleSet;
use cwtsca_core::scalogram::NormalizeMode;
use cwtsca_core::selection::DEFAULT_WAVELET_SAMPLES;

#[derive(Parser, Debug)]
#[command(
    name = "cwtsca",
    version,
    about = "Wavelet tooling for power side-channel disassembly"
)]
pub struct Cli {
    /// Seed for every random draw (synthesis noise, splits, benchmark input).
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory that relative output paths are written under.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to all cores, or 1 for `bench`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Synthesize a trace of repeated program loops.
    Synth(SynthArgs),
    /// Cut a trace into labeled clock-cycle windows.
    Segment(SegmentArgs),
    /// Continuous wavelet transform of a trace slice.
    Cwt(CwtArgs),
    /// Short-time Fourier transform magnitudes.
    Stft(StftArgs),
    /// Discrete Fourier transform of a trace slice.
    Fft(FftArgs),
    /// Mother wavelet samples and attributes.
    Wavelet {
        #[command(subcommand)]
        action: WaveletAction,
    },
    /// Render one scalogram image.
    Scalogram(ScalogramArgs),
    /// Rank wavelets by normalized cross-correlation with a trace.
    Select(SelectArgs),
    /// Nearest-centroid classification of scalogram features.
    Classify(ClassifyArgs),
    /// Classification accuracy over sliding scale windows.
    SweepScales(SweepArgs),
    /// Time coefficient calculation against the largest scale.
    Bench(BenchArgs),
    /// Pseudo-frequency of each scale.
    ScaleCurve(ScaleCurveArgs),
    /// Re-run the command recorded in a manifest.
    Rerun { manifest: PathBuf },
}

#[derive(Args, Debug, Clone)]
pub struct ProgramArgs {
    /// Built-in program loop.
    #[arg(long, default_value = "table1-loop")]
    pub preset: String,
    /// Program description file, one `mnemonic clock_length` per line; overrides --preset.
    #[arg(long)]
    pub program: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// Trace file: `.csv` (time,voltage) or raw little-endian f64 with a `.json` sidecar.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Sample rate for CSV input without a sidecar, Hz.
    #[arg(long)]
    pub sample_rate: Option<f64>,
    /// Clock rate for CSV input without a sidecar, Hz.
    #[arg(long)]
    pub clock: Option<f64>,
    /// First sample of the analyzed slice.
    #[arg(long, default_value_t = 0)]
    pub start: usize,
    /// Slice length; defaults to the rest of the trace.
    #[arg(long)]
    pub len: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct SynthModelArgs {
    /// Sample rate, Hz.
    #[arg(long, default_value_t = 800e6)]
    pub sample_rate: f64,
    /// Device clock, Hz.
    #[arg(long, default_value_t = 16e6)]
    pub clock: f64,
    /// Noise standard deviation as a multiple of the loop signal RMS.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Harmonic band of the class templates, `LO:HI` multiples of the clock.
    #[arg(long, default_value = "1:8", value_parser = parse_band)]
    pub band: (usize, usize),
    /// Harmonics per template.
    #[arg(long, default_value_t = 3)]
    pub harmonics: usize,
    /// Largest per-harmonic amplitude, volts.
    #[arg(long, default_value_t = 0.1)]
    pub amplitude: f64,
    /// Seed of the class templates (the simulated device).
    #[arg(long, default_value_t = 0)]
    pub template_seed: u64,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub program: ProgramArgs,
    #[command(flatten)]
    pub model: SynthModelArgs,
    #[arg(long, default_value_t = 5)]
    pub loops: usize,
    /// Slow multiplicative drift amplitude.
    #[arg(long, default_value_t = 0.0)]
    pub drift: f64,
    /// Relative gain error of the measurement chain.
    #[arg(long, default_value_t = 0.0)]
    pub gain_error: f64,
    /// Quantization step, volts; 0 disables.
    #[arg(long, default_value_t = 0.0)]
    pub quant: f64,
    /// Output trace; `.csv` writes CSV, anything else raw f64.
    #[arg(long, default_value = "trace.bin")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub program: ProgramArgs,
    /// Average the first K loops position by position.
    #[arg(long)]
    pub average: Option<usize>,
    #[arg(long, default_value = "windows.csv")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PathArg {
    Reference,
    Fast,
}

impl From<PathArg> for CwtPath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Reference => CwtPath::Reference,
            PathArg::Fast => CwtPath::Fast,
        }
    }
}

#[derive(Args, Debug)]
pub struct CwtArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "gaus1")]
    pub wavelet: String,
    /// `lo:hi[:step]` inclusive, or a comma list.
    #[arg(long, default_value = "1:50")]
    pub scales: ScaleSet,
    #[arg(long, value_enum, default_value = "fast")]
    pub path: PathArg,
    #[arg(long, default_value = "coeffs.csv")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum WindowArg {
    Rectangular,
    Hann,
}

#[derive(Args, Debug)]
pub struct StftArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub window_length: usize,
    #[arg(long, default_value_t = 0.5)]
    pub overlap: f64,
    #[arg(long, value_enum, default_value = "hann")]
    pub window: WindowArg,
    #[arg(long, default_value = "stft.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FftArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "spectrum.csv")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum WaveletAction {
    /// `(x, psi)` samples over the support.
    Dump {
        name: String,
        #[arg(long, default_value_t = 1024)]
        points: usize,
        #[arg(long, default_value = "wavelet.csv")]
        out: PathBuf,
    },
    /// Support, symmetry and center frequency of the built-in wavelets.
    Attrs {
        #[arg(long, default_value = "all")]
        wavelets: String,
        #[arg(long, default_value = "wavelet_attrs.csv")]
        out: PathBuf,
    },
}

#[derive(Args, Debug, Clone)]
pub struct RenderArgs {
    /// Colormap name, or a comma list where several are accepted.
    #[arg(long, default_value = "grayscale")]
    pub cmap: String,
    /// `per-window` or `global:MIN:MAX`.
    #[arg(long, default_value = "per-window")]
    pub normalize: NormalizeMode,
    /// Normalize coefficient magnitudes instead of signed values.
    #[arg(long = "abs")]
    pub absolute: bool,
    /// Nearest-neighbor resize, `WIDTHxHEIGHT`.
    #[arg(long, value_parser = parse_size)]
    pub resize: Option<(usize, usize)>,
}

#[derive(Args, Debug)]
pub struct ScalogramArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value = "gaus1")]
    pub wavelet: String,
    #[arg(long, default_value = "1:50")]
    pub scales: ScaleSet,
    #[command(flatten)]
    pub render: RenderArgs,
    /// `.pgm` for grayscale, `.ppm` for color maps.
    #[arg(long, default_value = "scalogram.pgm")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[arg(long)]
    pub sample_rate: Option<f64>,
    #[arg(long)]
    pub clock: Option<f64>,
    /// `all` or a comma list of wavelet names.
    #[arg(long, default_value = "all")]
    pub candidates: String,
    /// Samples per analyzed window; defaults to one clock cycle or five wavelet lengths, whichever is longer.
    #[arg(long)]
    pub window_length: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_WAVELET_SAMPLES)]
    pub wavelet_samples: usize,
    #[arg(long, default_value = "select.csv")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CyclesArg {
    First,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum LabelArg {
    Mnemonic,
    MnemonicCycle,
}

impl From<LabelArg> for LabelMode {
    fn from(l: LabelArg) -> Self {
        match l {
            LabelArg::Mnemonic => LabelMode::Mnemonic,
            LabelArg::MnemonicCycle => LabelMode::MnemonicCycle,
        }
    }
}

/// Where labeled windows come from: a recorded trace or a synthetic one.
#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Recorded trace; a synthetic trace is generated when absent.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub program: ProgramArgs,
    #[command(flatten)]
    pub model: SynthModelArgs,
    /// Loops to synthesize.
    #[arg(long, default_value_t = 3)]
    pub loops: usize,
    /// Which cycles of each instruction become samples.
    #[arg(long, value_enum, default_value = "first")]
    pub cycles: CyclesArg,
    /// Class granularity.
    #[arg(long, value_enum, default_value = "mnemonic")]
    pub labels: LabelArg,
    /// Windows kept per class.
    #[arg(long, default_value_t = 50)]
    pub per_class: usize,
    /// Mnemonics left out of the dataset, comma separated.
    #[arg(long, default_value = "rjmp")]
    pub exclude: String,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Wavelet name, comma list, or `all`.
    #[arg(long, default_value = "gaus1")]
    pub wavelet: String,
    #[arg(long, default_value = "1:21")]
    pub scales: ScaleSet,
    #[command(flatten)]
    pub render: RenderArgs,
    #[arg(long, default_value_t = 15)]
    pub trials: usize,
    #[arg(long, default_value_t = 0.7)]
    pub train_fraction: f64,
    /// Summary CSV; per-trial rows go to `<stem>_trials.csv` beside it.
    #[arg(long, default_value = "classify.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "gaus1")]
    pub wavelet: String,
    /// Integer scale range `lo:hi` covered by the sliding windows.
    #[arg(long, default_value = "1:100", value_parser = parse_band)]
    pub range: (usize, usize),
    #[arg(long, default_value_t = 20)]
    pub width: usize,
    #[arg(long, default_value_t = 10)]
    pub stride: usize,
    #[command(flatten)]
    pub render: RenderArgs,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, default_value = "all")]
    pub wavelets: String,
    /// Largest scales to time, each run over scales `1..=S`.
    #[arg(long, default_value = "10,50,100,200")]
    pub scales: ScaleSet,
    #[arg(long, default_value_t = 1000)]
    pub windows: usize,
    #[arg(long, default_value_t = 500)]
    pub window_length: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, value_enum, default_value = "reference")]
    pub path: PathArg,
    /// Timing CSV; the linear fits go to `<stem>_fit.csv` beside it.
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ScaleCurveArgs {
    #[arg(long, default_value = "all")]
    pub wavelets: String,
    #[arg(long, default_value = "1:50")]
    pub scales: ScaleSet,
    /// Sample period, seconds.
    #[arg(long, default_value_t = 2e-9)]
    pub dt: f64,
    #[arg(long, default_value = "scale_curve.csv")]
    pub out: PathBuf,
}

fn parse_pair(s: &str, sep: char) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| format!("expected `A{sep}B`, got {s:?}"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("{v:?} is not a whole number"))
    };
    Ok((num(a)?, num(b)?))
}

fn parse_band(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, ':')
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    parse_pair(s, 'x')
}
