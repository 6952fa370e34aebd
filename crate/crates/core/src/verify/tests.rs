use super::*;
use crate::loss::{anrat_objective, grad_lambda, lp_error, minimax_error, nrae, LossConfig};
use proptest::prelude::*;

fn rb(v: &[f64]) -> ResidualBatch {
    ResidualBatch::new(v.to_vec()).unwrap()
}

fn idx(l: f64) -> ConvexityIndex {
    ConvexityIndex::with_default_floor(l).unwrap()
}

#[test]
fn fd_grad_polynomials() {
    let g = fd_grad(|x| x[0] * x[0], &[3.0], 1e-6).unwrap();
    assert!((g[0] - 6.0).abs() < 1e-8);
    let g = fd_grad(|x| 2.0 * x[0] - 0.5 * x[1] + 4.0, &[0.3, -7.0], 1e-3).unwrap();
    assert!((g[0] - 2.0).abs() < 1e-12 && (g[1] + 0.5).abs() < 1e-12);
    assert!(matches!(fd_grad(|x| x[0].ln(), &[0.0], 1e-3), Err(Error::NonFinite(_))));
}

#[test]
fn fd_grad_agrees_with_grad_lambda() {
    let batch = rb(&[0.5, 1.0]);
    let cfg = LossConfig::new(2, 2, 1, 0.1).unwrap();
    let g = fd_grad(|x| anrat_objective(&batch, &cfg, &idx(x[0])).unwrap(), &[2.0], 1e-5).unwrap();
    let analytic = grad_lambda(&batch, &cfg, &idx(2.0)).unwrap();
    assert!((analytic - 0.10057055236337573).abs() < 1e-15);
    assert!((g[0] - analytic).abs() < 1e-6);
}

#[test]
fn naive_oracle_fixture_and_range() {
    let v = naive_nrae(&rb(&[0.5, 1.0]), 2, 2, 2.0).unwrap();
    assert!((v - 0.8388600427534492).abs() < 1e-14);
    assert!(matches!(naive_nrae(&rb(&[3.0]), 2, 2, 10.0), Err(Error::OracleRange(_))));
    assert_eq!(nrae(&rb(&[3.0]), 2, 2, &idx(10.0)).unwrap(), 9.0);
}

proptest! {
    // The literal formula loses about m·ε/λ^q absolute precision, so the
    // 1e-10 comparison is made where that loss is far smaller.
    #[test]
    fn naive_matches_stable(
        norms in prop::collection::vec(0.0..3.0f64, 1..20),
        log_l in (0.1f64).ln()..(20.0f64).ln(),
    ) {
        let batch = rb(&norms);
        let l = log_l.exp();
        match naive_nrae(&batch, 2, 2, l) {
            Ok(naive) => prop_assert!((naive - nrae(&batch, 2, 2, &idx(l)).unwrap()).abs() < 1e-10),
            Err(Error::OracleRange(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }

    #[test]
    fn scan_is_monotone_and_bracketed(norms in prop::collection::vec(0.0..3.0f64, 1..20)) {
        let batch = rb(&norms);
        let values = lambda_scan(&batch, 2, 2, &log_grid(1e-3, 50.0, 50)).unwrap();
        for w in values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12);
        }
        prop_assert!(values[0] >= lp_error(&batch, 2) - 1e-12);
        prop_assert!(values[49] <= minimax_error(&batch, 2) + 1e-12);
    }
}

#[test]
fn scan_examples() {
    let grid = log_grid(1e-3, 50.0, 50);
    let constant = lambda_scan(&rb(&[0.7; 5]), 2, 2, &grid).unwrap();
    assert!(constant.iter().all(|v| (v - 0.49).abs() < 1e-15));
    let values = lambda_scan(&rb(&[0.5, 1.0]), 2, 2, &grid).unwrap();
    assert!((values[0] - 0.625).abs() < 1e-4);
    assert!((values[49] - 1.0).abs() < 1e-2);
    assert!(lambda_scan(&rb(&[1.0]), 2, 2, &[1.0, 1.0]).is_err());
    assert!(lambda_scan(&rb(&[1.0]), 2, 2, &[1e-4, 1.0]).is_err());
}

#[test]
fn scan_suite_passes_and_writes_rows() {
    let grid = log_grid(1e-3, 50.0, 50);
    let summary = lambda_scan_suite(20, 3, &grid, 2, 2).unwrap();
    assert!(summary.passed && summary.max_drop <= SCAN_TOLERANCE);
    let text = String::from_utf8(crate::report::lambda_scan_csv(&summary).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 1 + 20 * 50);
    assert_eq!(summary, lambda_scan_suite(20, 3, &grid, 2, 2).unwrap());
}

#[test]
fn spearman_cases() {
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
    assert_eq!(spearman(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]), None);
    let tied = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 2.0, 3.0]).unwrap();
    assert!(tied > 0.9 && tied < 1.0);
}

fn theta_grid(lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    linear_grid(lo, hi, n).into_iter().map(|t| vec![t]).collect()
}

#[test]
fn linear_toy_is_convex_everywhere() {
    let xs = linear_grid(-1.0, 1.0, 7);
    let ys: Vec<f64> = xs.iter().map(|x| 0.5 - 2.0 * x).collect();
    let one = LinearToy { xs: xs.clone(), ys: ys.clone(), intercept: false };
    let scan = convexity_scan(&one, &[0.1, 1.0, 5.0], &theta_grid(-3.0, 3.0, 41), 2, 2).unwrap();
    assert_eq!(scan.baseline_fraction, 1.0);
    assert!(scan.psd_fraction.iter().all(|f| *f == 1.0));
    assert!(scan.is_monotone_trend(0.95));

    let two = LinearToy { xs, ys, intercept: true };
    let points: Vec<Vec<f64>> = linear_grid(-2.0, 2.0, 9)
        .into_iter()
        .flat_map(|a| linear_grid(-3.0, 3.0, 9).into_iter().map(move |b| vec![a, b]))
        .collect();
    // Beyond λ ≈ 1 one sample dominates, the Hessian is nearly rank one, and
    // the fixed-step stencil's truncation error exceeds the PSD tolerance.
    let scan = convexity_scan(&two, &[0.25, 0.5], &points, 2, 2).unwrap();
    assert_eq!(scan.baseline_fraction, 1.0);
    assert!(scan.psd_fraction.iter().all(|f| *f == 1.0));
}

#[test]
fn sinusoid_region_grows_with_lambda() {
    let lambdas = [0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let scan = convexity_scan(&SinusoidToy::default(), &lambdas, &theta_grid(-4.0, 6.0, 200), 2, 2).unwrap();
    assert!(scan.is_monotone_trend(0.95), "{scan:?}");
    assert!(scan.fraction_at(1.0).unwrap() >= scan.baseline_fraction, "{scan:?}");
    assert!(scan.flagged.iter().all(|f| *f == 0));
    let text = String::from_utf8(crate::report::convexity_csv(&scan).unwrap()).unwrap();
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn stable_and_literal_share_the_minimizer() {
    let grid = theta_grid(-4.0, 6.0, 200);
    for l in [0.1, 0.5, 1.0, 2.0, 5.0] {
        let (a, b) = shared_argmin(&SinusoidToy::default(), &grid, l, 2, 2).unwrap();
        assert_eq!(a, b, "lambda {l}");
    }
}

#[test]
fn gradcheck_suite_passes_and_detects_corruption() {
    let ok = gradcheck_suite(30, 1, None).unwrap();
    assert!(ok.passed, "{:e}", ok.max_rel_error);
    let bad = gradcheck_suite(5, 1, Some(1e-3)).unwrap();
    assert!(!bad.passed);
}

#[test]
fn report_compare() {
    let r = GradCheckReport::compare(&[1.0, 2.0], &[1.0, 2.002], 1e-8, 1e-6).unwrap();
    assert_eq!(r.worst_index, 1);
    assert!(!r.passed);
    let r = GradCheckReport::compare(&[0.0], &[f64::NAN], 1e-8, 1e-6).unwrap();
    assert!(r.max_rel_error.is_infinite());
    assert!(GradCheckReport::compare(&[1.0], &[], 1.0, 1.0).is_err());
}
