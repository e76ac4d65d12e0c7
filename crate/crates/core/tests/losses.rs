use proptest::prelude::*;

use scaffold_core::losses::{depth_agreement_report, fit_scale_shift, l2_depth_loss, robust_depth_loss, RobustLossParams};
use scaffold_core::raycast::DepthMap;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn robust_loss_is_even_nonnegative_and_monotone(r in -10.0..10.0f64, a in 0.0..5.0f64, b in 0.0..5.0f64, gamma in 0.01..2.0f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let up = robust_depth_loss(r, r + lo, gamma).0;
        let down = robust_depth_loss(r, r - lo, gamma).0;
        prop_assert!((up - down).abs() <= 1e-12 * up.abs().max(1.0));
        prop_assert!(up >= 0.0);
        prop_assert!(robust_depth_loss(r, r + hi, gamma).0 >= up - 1e-12);
    }

    #[test]
    fn robust_derivative_matches_central_differences(r in -5.0..5.0f64, delta in -3.0..3.0f64, gamma in 0.05..1.0f64) {
        let h = 1e-6;
        prop_assume!((delta.abs() - gamma).abs() > 10.0 * h && delta.abs() > 10.0 * h);
        let p = r + delta;
        let fd = (robust_depth_loss(r, p + h, gamma).0 - robust_depth_loss(r, p - h, gamma).0) / (2.0 * h);
        let g = robust_depth_loss(r, p, gamma).1;
        prop_assert!((fd - g).abs() <= 1e-6 * g.abs().max(1.0), "fd {} analytic {}", fd, g);
    }

    #[test]
    fn fitted_alignment_is_no_worse_than_identity(raw in prop::collection::vec(0.1..20.0f64, 2..200), a in -3.0..3.0f64, b in -5.0..5.0f64, noise in prop::collection::vec(-0.5..0.5f64, 200)) {
        let target: Vec<f64> = raw.iter().zip(&noise).map(|(x, e)| a * x + b + e).collect();
        let fit = fit_scale_shift(&raw, &target, None).unwrap();
        let identity: f64 = raw.iter().zip(&target).map(|(x, y)| l2_depth_loss(*y, *x)).sum();
        prop_assert!(fit.residual <= identity * (1.0 + 1e-9) + 1e-9);
        prop_assert_eq!(fit.valid, raw.len());
    }
}

#[test]
fn knee_is_continuous_in_value_and_slope() {
    let gamma = 0.1f64;
    let below = f64::from_bits(gamma.to_bits() - 1);
    let (v0, g0) = robust_depth_loss(0.0, below, gamma);
    let (v1, g1) = robust_depth_loss(0.0, gamma, gamma);
    assert!((v0 - v1).abs() < 1e-15);
    assert!((g0 - g1).abs() < 1e-15);
    assert_eq!(v1, 0.5 * gamma * gamma);
}

#[test]
fn exact_affine_target_is_recovered() {
    let raw: Vec<f64> = (1..=50).map(|i| i as f64 * 0.3).collect();
    let target: Vec<f64> = raw.iter().map(|x| 2.5 * x - 1.25).collect();
    let mut mask = vec![true; raw.len()];
    mask[3] = false;
    let fit = fit_scale_shift(&raw, &target, Some(&mask)).unwrap();
    assert!((fit.alpha - 2.5).abs() < 1e-12 && (fit.beta + 1.25).abs() < 1e-12);
    assert!(fit.residual < 1e-20);
    assert_eq!(fit.valid, 49);

    let flat = fit_scale_shift(&[2.0; 4], &[1.0, 2.0, 3.0, 4.0], None).unwrap();
    assert!(flat.degenerate);
    assert_eq!((flat.alpha, flat.beta), (0.0, 2.5));
    assert!(fit_scale_shift(&[f64::INFINITY], &[1.0], None).is_err());
}

#[test]
fn report_aggregates_match_per_map_sums() {
    let inf = f64::INFINITY;
    let r0 = DepthMap::new(2, 2, 7, vec![1.0, 2.0, inf, 4.0]).unwrap();
    let p0 = DepthMap::new(2, 2, 7, vec![1.05, 3.0, 1.0, inf]).unwrap();
    let r1 = DepthMap::new(3, 1, 9, vec![inf, 5.0, 6.0]).unwrap();
    let p1 = DepthMap::new(3, 1, 9, vec![2.0, 5.0, 5.5]).unwrap();
    let params = RobustLossParams::default();
    let rep = depth_agreement_report(&[r0, r1], &[p0, p1], &params).unwrap();

    let g = params.gamma;
    let m0 = robust_depth_loss(1.0, 1.05, g).0 + robust_depth_loss(2.0, 3.0, g).0;
    let m1 = robust_depth_loss(5.0, 5.0, g).0 + robust_depth_loss(6.0, 5.5, g).0;
    assert_eq!(rep.maps[0].valid_pixels, 2);
    assert_eq!(rep.maps[1].valid_pixels, 2);
    assert!((rep.maps[0].mean_robust.unwrap() - m0 / 2.0).abs() < 1e-15);
    assert!((rep.maps[1].mean_abs_error.unwrap() - 0.25).abs() < 1e-15);
    assert_eq!(rep.aggregate.total_pixels, 7);
    assert_eq!(rep.aggregate.valid_pixels, 4);
    assert!((rep.aggregate.valid_fraction - 4.0 / 7.0).abs() < 1e-15);
    assert!((rep.aggregate.mean_robust.unwrap() - (m0 + m1) / 4.0).abs() < 1e-15);
    assert_eq!(rep.to_csv().lines().count(), 4);

    let blank = DepthMap::new(1, 2, 1, vec![1.0, inf]).unwrap();
    let other = DepthMap::new(1, 2, 1, vec![inf, 1.0]).unwrap();
    let rep = depth_agreement_report(&[blank], &[other], &params).unwrap();
    assert_eq!(rep.aggregate.mean_robust, None);
    assert_eq!(rep.maps[0].mean_abs_error, None);
    assert!(rep.to_csv().lines().nth(1).unwrap().ends_with(",,"));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let a = DepthMap::new(1, 1, 0, vec![1.0f64]).unwrap();
    let b = DepthMap::new(2, 1, 0, vec![1.0, 1.0]).unwrap();
    let p = RobustLossParams::default();
    assert!(depth_agreement_report(&[a.clone()], &[b], &p).is_err());
    assert!(depth_agreement_report(&[a.clone()], &[], &p).is_err());
    assert!(depth_agreement_report(&[a.clone()], &[a], &RobustLossParams { gamma: 0.0, ..p }).is_err());
}
