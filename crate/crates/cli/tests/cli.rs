use std::path::Path;
use std::process::{Command, Output};

fn cwtsca(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cwtsca"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn text(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cwtsca(dir.path(), &["synth", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert_eq!(cwtsca(dir.path(), &["frobnicate"]).status.code(), Some(1));
    assert_eq!(
        cwtsca(dir.path(), &["cwt", "--scales", "5:1", "--in", "x.csv"])
            .status
            .code(),
        Some(1)
    );
    let out = cwtsca(dir.path(), &["cwt", "--in", "missing.bin"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    assert_eq!(
        cwtsca(dir.path(), &["wavelet", "dump", "haar"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(cwtsca(dir.path(), &["--help"]).status.code(), Some(0));
    let out = cwtsca(dir.path(), &["--version"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("cwtsca "));
}

#[test]
fn synth_then_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = cwtsca(
        d,
        &[
            "synth",
            "--preset",
            "table1-loop",
            "--loops",
            "5",
            "--noise",
            "0.01",
            "--seed",
            "7",
            "--out",
            "t.bin",
        ],
    );
    assert!(out.status.success(), "{out:?}");
    assert_eq!(
        std::fs::metadata(d.join("t.bin")).unwrap().len(),
        5 * 287 * 50 * 8
    );
    assert!(text(d, "t.bin.json").contains("\"clock_hz\""));

    let out = cwtsca(d, &["segment", "--in", "t.bin", "--out", "w.csv"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("loops=5 windows=1435"));
    assert_eq!(text(d, "w.csv").lines().count(), 1 + 1435);

    assert!(cwtsca(
        d,
        &[
            "cwt",
            "--wavelet",
            "gaus1",
            "--scales",
            "1:5",
            "--in",
            "t.bin",
            "--len",
            "64",
            "--out",
            "c.csv"
        ]
    )
    .status
    .success());
    let c = text(d, "c.csv");
    let lines: Vec<&str> = c.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[1].starts_with("1,"));
    assert_eq!(lines[5].split(',').count(), 65);

    assert!(cwtsca(
        d,
        &[
            "scalogram",
            "--in",
            "t.bin",
            "--cmap",
            "cyclic",
            "--resize",
            "20x10",
            "--out",
            "s.ppm"
        ]
    )
    .status
    .success());
    let img = std::fs::read(d.join("s.ppm")).unwrap();
    assert!(img.starts_with(b"P6\n20 10\n255\n"));
    assert_eq!(img.len(), b"P6\n20 10\n255\n".len() + 20 * 10 * 3);

    assert!(cwtsca(
        d,
        &[
            "select",
            "--trace",
            "t.bin",
            "--candidates",
            "gaus1,mexh,morl",
            "--out",
            "sel.csv"
        ]
    )
    .status
    .success());
    assert_eq!(text(d, "sel.csv").lines().count(), 4);

    assert!(cwtsca(
        d,
        &["fft", "--in", "t.bin", "--len", "100", "--out", "f.csv"]
    )
    .status
    .success());
    assert_eq!(text(d, "f.csv").lines().count(), 101);
    assert!(cwtsca(
        d,
        &[
            "stft",
            "--in",
            "t.bin",
            "--len",
            "1000",
            "--window-length",
            "100",
            "--overlap",
            "0.5",
            "--out",
            "st.csv"
        ]
    )
    .status
    .success());
    let st = text(d, "st.csv");
    assert_eq!(st.lines().count(), 101);
    assert_eq!(st.lines().next().unwrap().split(',').count(), 1 + 19);
}

#[test]
fn classify_writes_trial_rows_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "classify",
        "--wavelet",
        "gaus1",
        "--scales",
        "1:21",
        "--cmap",
        "grayscale",
        "--trials",
        "15",
        "--noise",
        "1",
        "--seed",
        "3",
    ];
    assert!(cwtsca(d, &args).status.success());
    let summary = text(d, "classify.csv");
    let trials = text(d, "classify_trials.csv");
    assert_eq!(
        summary.lines().next().unwrap(),
        "wavelet,scales,cmap,mean_acc,std_acc,trials"
    );
    assert!(summary
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("gaus1,1:21,grayscale,"));
    assert!(summary.lines().nth(1).unwrap().ends_with(",15"));
    assert_eq!(trials.lines().count(), 16);
    assert!(cwtsca(d, &args).status.success());
    assert_eq!(text(d, "classify.csv"), summary);
    assert_eq!(text(d, "classify_trials.csv"), trials);
}

#[test]
fn sweep_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(cwtsca(
        d,
        &[
            "sweep-scales",
            "--range",
            "1:30",
            "--width",
            "10",
            "--stride",
            "10",
            "--trials",
            "2",
            "--per-class",
            "10"
        ]
    )
    .status
    .success());
    let sweep = text(d, "sweep.csv");
    assert_eq!(
        sweep.lines().next().unwrap(),
        "scale_lo,scale_hi,mean_acc,std_acc"
    );
    assert_eq!(sweep.lines().count(), 4);

    assert!(cwtsca(
        d,
        &[
            "scale-curve",
            "--wavelets",
            "all",
            "--scales",
            "1:50",
            "--dt",
            "2e-9"
        ]
    )
    .status
    .success());
    let curve = text(d, "scale_curve.csv");
    assert_eq!(curve.lines().count(), 1 + 500);
    assert!(curve.contains("\ngaus1,1,100000000\n"));
    assert!(curve.contains("\nmorl,1,406250000\n"));

    assert!(cwtsca(d, &["wavelet", "attrs"]).status.success());
    let attrs = text(d, "wavelet_attrs.csv");
    assert!(attrs.contains("\ngaus3,Gaussian,-5,5,anti-sym.,0.4\n"));
    assert!(attrs.contains("\nmorl,Morlet,-8,8,symmetric,0.8125\n"));
    assert!(cwtsca(d, &["wavelet", "dump", "mexh", "--points", "64"])
        .status
        .success());
    assert_eq!(text(d, "wavelet.csv").lines().count(), 65);
}

#[test]
fn bench_grid_and_fit() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "bench",
        "--wavelets",
        "gaus1,morl",
        "--scales",
        "2,4,8",
        "--windows",
        "4",
        "--window-length",
        "64",
        "--trials",
        "3",
        "--path",
        "fast",
    ];
    assert!(cwtsca(d, &args).status.success());
    assert_eq!(text(d, "bench.csv").lines().count(), 1 + 2 * 3 * 3);
    assert_eq!(text(d, "bench_fit.csv").lines().count(), 3);
    assert!(text(d, "bench.csv.manifest.json").contains("\"parallel_timing\": false"));
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "2", "--out", "par.csv"]);
    assert!(cwtsca(d, &threaded).status.success());
    assert!(text(d, "par.csv.manifest.json").contains("\"parallel_timing\": true"));
    assert_eq!(
        cwtsca(d, &["bench", "--scales", "1.5,2,3"]).status.code(),
        Some(2)
    );
}

#[test]
fn outputs_land_in_out_dir_and_rerun_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = [
        "--out-dir",
        "runs",
        "--seed",
        "4",
        "synth",
        "--loops",
        "1",
        "--noise",
        "1",
        "--out",
        "n.csv",
    ];
    assert!(cwtsca(d, &args).status.success());
    let first = text(d, "runs/n.csv");
    assert!(first.starts_with("time_s,voltage_v\n"));
    std::fs::remove_file(d.join("runs/n.csv")).unwrap();
    assert!(cwtsca(d, &["rerun", "runs/n.csv.manifest.json"])
        .status
        .success());
    assert_eq!(text(d, "runs/n.csv"), first);
    let mut other = args.to_vec();
    other[3] = "5";
    other[10] = "m.csv";
    assert!(cwtsca(d, &other).status.success());
    assert_ne!(text(d, "runs/m.csv"), first);
}
