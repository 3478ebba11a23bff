use cwtsca_core::cwt::{cwt_fast, cwt_reference, CwtPlan, ScaleSet};
use cwtsca_core::WaveletSpec;
use proptest::prelude::*;

fn wavelet() -> impl Strategy<Value = WaveletSpec> {
    (0..10usize).prop_map(|i| WaveletSpec::all_builtin().swap_remove(i))
}

fn signal(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0..10.0f64, 1..max)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fast_agrees_with_reference(x in signal(300), w in wavelet(),
                                  scales in prop::collection::vec(0.3..60.0f64, 1..6)) {
        let mut scales = scales;
        scales.sort_by(f64::total_cmp);
        scales.dedup();
        let scales = ScaleSet::new(scales).unwrap();
        let r = cwt_reference(&x, &w, &scales).unwrap();
        let f = cwt_fast(&x, &w, &scales).unwrap();
        prop_assert_eq!((r.rows(), r.cols()), (scales.len(), x.len()));
        if r.max_abs() > 1e-9 {
            prop_assert!(rel_diff(r.values(), f.values()) < 1e-9);
        } else {
            prop_assert!(f.max_abs() < 1e-9);
        }
    }

    #[test]
    fn linear_in_the_signal(x in signal(200), w in wavelet(), alpha in -3.0..3.0f64) {
        let scales = ScaleSet::up_to(12).unwrap();
        let y: Vec<f64> = x.iter().rev().copied().collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + b).collect();
        let plan = CwtPlan::<f64>::new(&w, &scales).unwrap();
        let (cx, cy, cz) = (plan.reference(&x).unwrap(), plan.reference(&y).unwrap(), plan.reference(&z).unwrap());
        let combo: Vec<f64> = cx.values().iter().zip(cy.values()).map(|(a, b)| alpha * a + b).collect();
        let scale = cx.max_abs().max(cy.max_abs()).max(1.0);
        let err = combo.iter().zip(cz.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err / scale < 1e-10);
    }

    #[test]
    fn leading_zeros_shift_columns(x in signal(150), w in wavelet(), shift in 1..40usize) {
        let scales = ScaleSet::new(vec![1.0, 3.5, 8.0]).unwrap();
        let mut y = vec![0.0; shift];
        y.extend_from_slice(&x);
        let (cx, cy) = (cwt_reference(&x, &w, &scales).unwrap(), cwt_reference(&y, &w, &scales).unwrap());
        let scale = cx.max_abs().max(1e-300);
        for r in 0..scales.len() {
            for b in 0..x.len() {
                prop_assert!((cx.get(r, b) - cy.get(r, b + shift)).abs() / scale < 1e-12);
            }
        }
    }

    #[test]
    fn single_precision_tracks_double(x in signal(200), w in wavelet()) {
        let scales = ScaleSet::up_to(10).unwrap();
        let xf: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        let d = cwt_fast(&x, &w, &scales).unwrap();
        let s = cwt_fast(&xf, &w, &scales).unwrap();
        let s: Vec<f64> = s.values().iter().map(|&v| f64::from(v)).collect();
        if d.max_abs() > 1e-6 {
            prop_assert!(rel_diff(d.values(), &s) < 1e-4);
        }
    }
}

#[test]
fn plan_reuse_matches_one_shot() {
    let w = WaveletSpec::mexican_hat();
    let scales: ScaleSet = "1:30".parse().unwrap();
    let plan = CwtPlan::<f64>::new(&w, &scales).unwrap();
    let fast = plan.fast_for_len(256).unwrap();
    for k in 0..3 {
        let x: Vec<f64> = (0..256)
            .map(|i| ((i * (k + 3)) as f64 * 0.37).sin())
            .collect();
        assert_eq!(
            fast.transform(&x).unwrap(),
            cwt_fast(&x, &w, &scales).unwrap()
        );
        assert!(fast.transform(&x[..100]).is_err());
    }
}
