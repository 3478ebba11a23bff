use cwtsca_core::bench::{fit_linear, time_cwt, BenchConfig, CwtPath};
use cwtsca_core::WaveletSpec;

fn config(max_scales: Vec<usize>, n_windows: usize, trials: usize) -> BenchConfig {
    BenchConfig {
        max_scales,
        n_windows,
        window_length: 500,
        trials,
        path: CwtPath::Reference,
        seed: 2,
        parallel: false,
    }
}

// One test so no other timing runs alongside it.
#[test]
fn reference_timing_shape() {
    let w = [WaveletSpec::gaussian(1).unwrap()];

    // desk scale completes
    let r = time_cwt::<f64>(&w, &config(vec![50], 1000, 1)).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert!(r.rows[0].seconds > 0.0);
    assert!(fit_linear(&r, "gaus1").is_err());

    // once kernels outgrow the 500-sample window each extra scale costs the same
    let r = time_cwt::<f64>(&w, &config(vec![200, 400], 20, 3)).unwrap();
    let s = r.summary("gaus1");
    let ratio = s[1].2 / s[0].2;
    assert!((1.5..=2.5).contains(&ratio), "min-time ratio {ratio}");
}
