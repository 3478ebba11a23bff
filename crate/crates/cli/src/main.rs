mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::Parser;
use serde::{Deserialize, Serialize};

use args::*;
use cwtsca_core::bench::{fit_csv, time_cwt, BenchConfig};
use cwtsca_core::classify::{
    build_dataset, run_trials, scale_window_sweep, sweep_csv, FeatureSpec, LabelMode, SplitSpec,
    SweepConfig, SyntheticCorpus, WindowFilter,
};
use cwtsca_core::cwt::{scale_curve, CwtPlan, ScaleSet};
use cwtsca_core::scalogram::{render, write_image, Colormap, ImageFormat, RenderOptions};
use cwtsca_core::selection::rank_wavelets;
use cwtsca_core::spectral::{fft, stft, StftParams, WindowKind};
use cwtsca_core::trace::{
    average_loops, load_trace, segment, synthesize_trace, write_csv, write_raw, AcquisitionMeta,
    CsvOptions, HarmonicTemplates, ProgramLoop, TraceFormat, TraceModelParams,
};
use cwtsca_core::wavelets::{eval_wavelet, WaveletSpec};
use cwtsca_core::{LabeledWindow, Trace};

const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Written next to every output as `<output>.manifest.json`.
#[derive(Serialize, Deserialize, Debug, PartialEq)]
struct Manifest {
    tool: String,
    version: String,
    argv: Vec<String>,
    outputs: Vec<PathBuf>,
    parallel_timing: bool,
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    match dispatch(argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Usage(clap::Error),
    Data(anyhow::Error),
}

fn dispatch(argv: Vec<String>) -> std::result::Result<(), Failure> {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return Ok(());
        }
        Err(e) => return Err(Failure::Usage(e)),
    };
    if let Command::Rerun { manifest } = &cli.command {
        let m = read_manifest(manifest).map_err(Failure::Data)?;
        let mut replay = vec![argv[0].clone()];
        replay.extend(m.argv);
        if matches!(replay.get(1).map(String::as_str), Some("rerun")) {
            return Err(Failure::Data(anyhow!(
                "manifest {} records another rerun",
                manifest.display()
            )));
        }
        return dispatch(replay);
    }
    run(&cli, &argv[1..]).map_err(Failure::Data)
}

fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m: Manifest =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if m.tool != "cwtsca" {
        bail!("{} is not a cwtsca manifest", path.display());
    }
    Ok(m)
}

/// Output paths and manifest writing for one invocation.
struct Ctx<'a> {
    out_dir: &'a Path,
    argv: &'a [String],
    seed: u64,
    parallel_timing: bool,
}

impl Ctx<'_> {
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }

    fn write_text(&self, path: &Path, text: &str) -> Result<()> {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    fn finish(&self, outputs: &[PathBuf]) -> Result<()> {
        let primary = &outputs[0];
        let manifest = Manifest {
            tool: "cwtsca".into(),
            version: VERSION.into(),
            argv: self.argv.to_vec(),
            outputs: outputs.to_vec(),
            parallel_timing: self.parallel_timing,
        };
        let mut path = primary.as_os_str().to_owned();
        path.push(".manifest.json");
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        self.write_text(Path::new(&path), &text)
    }
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}_{suffix}.csv"))
}

fn run(cli: &Cli, argv: &[String]) -> Result<()> {
    let is_bench = matches!(cli.command, Command::Bench(_));
    let threads = cli.threads.or(if is_bench { Some(1) } else { None });
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("creating {}", cli.out_dir.display()))?;
    let ctx = Ctx {
        out_dir: &cli.out_dir,
        argv,
        seed: cli.seed,
        parallel_timing: is_bench && threads.unwrap_or(1) > 1,
    };
    match &cli.command {
        Command::Synth(a) => cmd_synth(&ctx, a),
        Command::Segment(a) => cmd_segment(&ctx, a),
        Command::Cwt(a) => cmd_cwt(&ctx, a),
        Command::Stft(a) => cmd_stft(&ctx, a),
        Command::Fft(a) => cmd_fft(&ctx, a),
        Command::Wavelet { action } => cmd_wavelet(&ctx, action),
        Command::Scalogram(a) => cmd_scalogram(&ctx, a),
        Command::Select(a) => cmd_select(&ctx, a),
        Command::Classify(a) => cmd_classify(&ctx, a),
        Command::SweepScales(a) => cmd_sweep(&ctx, a),
        Command::Bench(a) => cmd_bench(&ctx, a),
        Command::ScaleCurve(a) => cmd_scale_curve(&ctx, a),
        Command::Rerun { .. } => unreachable!("handled before run"),
    }
}

fn program_of(p: &ProgramArgs) -> Result<ProgramLoop> {
    Ok(match &p.program {
        Some(path) => ProgramLoop::from_file(path)?,
        None => ProgramLoop::preset(&p.preset)?,
    })
}

fn load(path: &Path, sample_rate: Option<f64>, clock: Option<f64>) -> Result<Trace> {
    let opts = CsvOptions {
        header: None,
        sample_rate_hz: sample_rate,
        clock_hz: clock,
    };
    Ok(load_trace(path, &TraceFormat::from_extension(path, opts))?)
}

/// The trace and the requested slice of its samples.
fn load_slice(a: &InputArgs) -> Result<(Trace, Vec<f64>)> {
    let trace = load(&a.input, a.sample_rate, a.clock)?;
    let end = match a.len {
        Some(len) => a.start + len,
        None => trace.len(),
    };
    if a.start >= end || end > trace.len() {
        bail!(
            "slice {}..{end} is outside the {}-sample trace",
            a.start,
            trace.len()
        );
    }
    let slice = trace.samples()[a.start..end].to_vec();
    Ok((trace, slice))
}

fn templates_of(m: &SynthModelArgs) -> HarmonicTemplates {
    HarmonicTemplates {
        harmonics: m.harmonics,
        amplitude: m.amplitude,
        seed: m.template_seed,
        ..HarmonicTemplates::default().band(m.band.0, m.band.1)
    }
}

fn cmd_synth(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    let program = program_of(&a.program)?;
    let meta = AcquisitionMeta::new(a.model.sample_rate, a.model.clock)?;
    let templates = templates_of(&a.model)
        .build::<f64>(&program.distinct_labels(), meta.samples_per_cycle())?;
    let mut params = TraceModelParams::noiseless(templates);
    let rms = params.loop_rms(&program)?;
    params = params.with_noise(a.model.noise * rms, ctx.seed);
    params.device_drift_amplitude = a.drift;
    params.measurement_gain_error = a.gain_error;
    params.measurement_quant_step = a.quant;
    let trace = synthesize_trace(&program, &params, a.loops, meta)?;
    let out = ctx.resolve(&a.out);
    match TraceFormat::from_extension(&out, CsvOptions::default()) {
        TraceFormat::Csv(_) => write_csv(&trace, &out)?,
        TraceFormat::Raw => write_raw(&trace, &out)?,
    }
    ctx.finish(&[out])
}

fn windows_csv(windows: &[LabeledWindow]) -> String {
    let len = windows.first().map_or(0, |w| w.samples.len());
    let mut out = String::from("loop,position,mnemonic,cycle");
    for i in 0..len {
        let _ = write!(out, ",s{i}");
    }
    out.push('\n');
    for w in windows {
        let _ = write!(
            out,
            "{},{},{},{}",
            w.loop_index, w.position, w.label.mnemonic, w.label.cycle
        );
        for s in &w.samples {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
    }
    out
}

fn cmd_segment(ctx: &Ctx, a: &SegmentArgs) -> Result<()> {
    let trace = load(&a.input.input, a.input.sample_rate, a.input.clock)?;
    let program = program_of(&a.program)?;
    let mut windows = segment(&trace, &program, a.input.start)?;
    let loops = windows.len() / program.total_cycles();
    println!("loops={loops} windows={}", windows.len());
    if let Some(k) = a.average {
        windows = average_loops(&windows, k)?;
    }
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &windows_csv(&windows))?;
    ctx.finish(&[out])
}

fn matrix_csv(
    first_header: &str,
    columns: usize,
    rows: impl Iterator<Item = (f64, Vec<f64>)>,
) -> String {
    let mut out = String::from(first_header);
    for i in 0..columns {
        let _ = write!(out, ",c{i}");
    }
    out.push('\n');
    for (key, values) in rows {
        let _ = write!(out, "{key}");
        for v in values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn cmd_cwt(ctx: &Ctx, a: &CwtArgs) -> Result<()> {
    let (trace, x) = load_slice(&a.input)?;
    let plan = CwtPlan::new(&WaveletSpec::by_name(&a.wavelet)?, &a.scales)?;
    let m = match a.path {
        PathArg::Reference => plan.reference(&x)?,
        PathArg::Fast => plan.fast(&x)?,
    }
    .with_sample_period(trace.meta().sample_period());
    let rows = (0..m.rows()).map(|r| (m.scales().as_slice()[r], m.row(r).to_vec()));
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &matrix_csv("scale", m.cols(), rows))?;
    ctx.finish(&[out])
}

fn cmd_stft(ctx: &Ctx, a: &StftArgs) -> Result<()> {
    let (trace, x) = load_slice(&a.input)?;
    let kind = match a.window {
        WindowArg::Rectangular => WindowKind::Rectangular,
        WindowArg::Hann => WindowKind::Hann,
    };
    let params = StftParams::new(a.window_length, a.overlap, kind)?;
    let s = stft(&x, &params, trace.meta().sample_rate_hz())?;
    let rows = s
        .magnitudes
        .iter()
        .enumerate()
        .map(|(k, row)| (k as f64 * s.bin_resolution, row.clone()));
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &matrix_csv("frequency_hz", s.frames(), rows))?;
    ctx.finish(&[out])
}

fn cmd_fft(ctx: &Ctx, a: &FftArgs) -> Result<()> {
    let (trace, x) = load_slice(&a.input)?;
    let s = fft(&x, trace.meta().sample_rate_hz())?;
    let mut text = String::from("bin,frequency_hz,re,im,magnitude\n");
    for (k, c) in s.bins.iter().enumerate() {
        let _ = writeln!(
            text,
            "{k},{},{},{},{}",
            s.frequency(k),
            c.re,
            c.im,
            c.norm()
        );
    }
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &text)?;
    ctx.finish(&[out])
}

fn cmd_wavelet(ctx: &Ctx, action: &WaveletAction) -> Result<()> {
    match action {
        WaveletAction::Dump { name, points, out } => {
            let (grid, psi) = eval_wavelet::<f64>(&WaveletSpec::by_name(name)?, *points)?;
            let mut text = String::from("x,psi\n");
            for (x, v) in grid.iter().zip(&psi) {
                let _ = writeln!(text, "{x},{v}");
            }
            let out = ctx.resolve(out);
            ctx.write_text(&out, &text)?;
            ctx.finish(&[out])
        }
        WaveletAction::Attrs { wavelets, out } => {
            let mut text = String::from(
                "wavelet,family,lower_bound,upper_bound,symmetry,center_frequency_hz\n",
            );
            for w in WaveletSpec::parse_list(wavelets)? {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{}",
                    w.name(),
                    w.family(),
                    w.lower_bound(),
                    w.upper_bound(),
                    w.symmetry(),
                    w.center_frequency()
                );
            }
            let out = ctx.resolve(out);
            ctx.write_text(&out, &text)?;
            ctx.finish(&[out])
        }
    }
}

fn render_options(r: &RenderArgs, cmap: &str) -> Result<RenderOptions> {
    Ok(RenderOptions {
        normalize: r.normalize,
        absolute: r.absolute,
        colormap: Colormap::by_name(cmap)?,
        resize: r.resize,
    })
}

fn cmd_scalogram(ctx: &Ctx, a: &ScalogramArgs) -> Result<()> {
    let mut input = a.input.clone();
    let (trace, _) = load_slice(&input)?;
    if input.len.is_none() {
        // one clock cycle unless told otherwise
        input.len = Some(
            trace
                .meta()
                .samples_per_cycle()
                .min(trace.len() - input.start.min(trace.len())),
        );
    }
    let (trace, x) = load_slice(&input)?;
    let m = CwtPlan::new(&WaveletSpec::by_name(&a.wavelet)?, &a.scales)?
        .fast(&x)?
        .with_sample_period(trace.meta().sample_period());
    let s = render(&m, &render_options(&a.render, &a.render.cmap)?)?;
    let format = ImageFormat::for_channels(s.channels());
    let out = ctx.resolve(&a.out);
    let want = if format == ImageFormat::Pgm {
        "pgm"
    } else {
        "ppm"
    };
    match out.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case(want) => {}
        _ => bail!(
            "colormap {} produces a .{want} image, but the output is {}",
            a.render.cmap,
            out.display()
        ),
    }
    write_image(&s, &out, format)?;
    ctx.finish(&[out])
}

fn cmd_select(ctx: &Ctx, a: &SelectArgs) -> Result<()> {
    let trace = load(&a.trace, a.sample_rate, a.clock)?;
    let candidates = WaveletSpec::parse_list(&a.candidates)?;
    let window = a
        .window_length
        .unwrap_or_else(|| trace.meta().samples_per_cycle().max(5 * a.wavelet_samples));
    let report = rank_wavelets(&trace, &candidates, window, a.wavelet_samples)?;
    println!("ranking: {}", report.ranking.join(" > "));
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &report.to_csv())?;
    ctx.finish(&[out])
}

fn windows_of(d: &DataArgs, seed: u64) -> Result<Vec<LabeledWindow>> {
    let program = program_of(&d.program)?;
    let windows = match &d.trace {
        Some(path) => {
            let trace = load(path, Some(d.model.sample_rate), Some(d.model.clock))?;
            segment(&trace, &program, 0)?
        }
        None => SyntheticCorpus {
            meta: AcquisitionMeta::new(d.model.sample_rate, d.model.clock)?,
            program,
            templates: templates_of(&d.model),
            relative_noise: d.model.noise,
            loops: d.loops,
            seed,
        }
        .windows()?,
    };
    let filter = WindowFilter {
        exclude: d
            .exclude
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        first_cycle_only: d.cycles == CyclesArg::First,
        per_class: Some(d.per_class),
    };
    let kept = filter.apply(&windows, LabelMode::from(d.labels));
    if kept.is_empty() {
        bail!("no windows left after filtering");
    }
    Ok(kept)
}

fn cmd_classify(ctx: &Ctx, a: &ClassifyArgs) -> Result<()> {
    let windows = windows_of(&a.data, ctx.seed)?;
    let wavelets = WaveletSpec::parse_list(&a.wavelet)?;
    let split = SplitSpec {
        train_fraction: a.train_fraction,
        seed: ctx.seed,
        stratified: true,
    };
    let mut summary = String::from("wavelet,scales,cmap,mean_acc,std_acc,trials\n");
    let mut trials = String::from("wavelet,scales,cmap,trial,accuracy\n");
    for w in &wavelets {
        for cmap in a.render.cmap.split(',').map(str::trim) {
            let spec = FeatureSpec {
                wavelet: w.clone(),
                scales: a.scales.clone(),
                render: render_options(&a.render, cmap)?,
            };
            let ds = build_dataset(&windows, &spec, LabelMode::from(a.data.labels))?;
            let s = run_trials(&ds, &split, a.trials)?;
            let _ = writeln!(
                summary,
                "{},{},{cmap},{},{},{}",
                w.name(),
                a.scales,
                s.mean,
                s.std,
                s.accuracies.len()
            );
            for (t, acc) in s.accuracies.iter().enumerate() {
                let _ = writeln!(trials, "{},{},{cmap},{t},{acc}", w.name(), a.scales);
            }
        }
    }
    let out = ctx.resolve(&a.out);
    let trials_out = sibling(&out, "trials");
    ctx.write_text(&out, &summary)?;
    ctx.write_text(&trials_out, &trials)?;
    ctx.finish(&[out, trials_out])
}

fn cmd_sweep(ctx: &Ctx, a: &SweepArgs) -> Result<()> {
    let windows = windows_of(&a.data, ctx.seed)?;
    let cmap = a.render.cmap.trim();
    let cfg = SweepConfig {
        scale_lo: a.range.0,
        scale_hi: a.range.1,
        width: a.width,
        stride: a.stride,
        trials: a.trials,
        seed: ctx.seed,
        label_mode: LabelMode::from(a.data.labels),
    };
    let rows = scale_window_sweep(
        &windows,
        &WaveletSpec::by_name(&a.wavelet)?,
        &render_options(&a.render, cmap)?,
        &cfg,
    )?;
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &sweep_csv(&rows))?;
    ctx.finish(&[out])
}

fn integer_scales(s: &ScaleSet) -> Result<Vec<usize>> {
    s.as_slice()
        .iter()
        .map(|&v| {
            if v.fract() == 0.0 && v >= 1.0 {
                Ok(v as usize)
            } else {
                Err(anyhow!("benchmark scales must be whole numbers, got {v}"))
            }
        })
        .collect()
}

fn cmd_bench(ctx: &Ctx, a: &BenchArgs) -> Result<()> {
    let wavelets = WaveletSpec::parse_list(&a.wavelets)?;
    let cfg = BenchConfig {
        max_scales: integer_scales(&a.scales)?,
        n_windows: a.windows,
        window_length: a.window_length,
        trials: a.trials,
        path: a.path.into(),
        seed: ctx.seed,
        parallel: ctx.parallel_timing,
    };
    let result = time_cwt::<f64>(&wavelets, &cfg)?;
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &result.to_csv())?;
    let mut outputs = vec![out.clone()];
    if cfg.max_scales.len() >= 3 {
        let fit_out = sibling(&out, "fit");
        ctx.write_text(&fit_out, &fit_csv(&result, &wavelets)?)?;
        outputs.push(fit_out);
    } else {
        eprintln!("note: fewer than 3 scales, no linear fit written");
    }
    ctx.finish(&outputs)
}

fn cmd_scale_curve(ctx: &Ctx, a: &ScaleCurveArgs) -> Result<()> {
    let mut text = String::from("wavelet,scale,pseudo_frequency_hz\n");
    for w in WaveletSpec::parse_list(&a.wavelets)? {
        for (scale, f) in scale_curve(&w, &a.scales, a.dt)? {
            let _ = writeln!(text, "{},{scale},{f}", w.name());
        }
    }
    let out = ctx.resolve(&a.out);
    ctx.write_text(&out, &text)?;
    ctx.finish(&[out])
}
