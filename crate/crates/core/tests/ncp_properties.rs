use ncpflow::ncp::{
    active_set_partition, c_function, complementarity_violation, constraint_jacobian_row, CFunctionKind, CellGradient,
    Smoothing,
};
use proptest::prelude::*;

fn sfb(tau: f64) -> CFunctionKind {
    CFunctionKind::SmoothFischerBurmeister(Smoothing::new(tau).unwrap())
}

fn complementary(a: f64, b: f64) -> bool {
    a >= -1e-12 && b >= -1e-12 && (a * b).abs() <= 1e-12
}

// Points on or near the complementary set, where random sampling rarely lands.
fn edge_value() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(-0.0), -10.0..10.0f64, (-1e-6..1e-6f64)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn min_and_fb_vanish_exactly_on_complementary_set(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        for kind in [CFunctionKind::Min, CFunctionKind::FischerBurmeister] {
            let v = kind.value(a, b);
            prop_assert_eq!(v.abs() <= 1e-12, complementary(a, b), "{:?} at ({}, {}) = {}", kind, a, b, v);
        }
    }

    #[test]
    fn axes_are_zeros(t in 0.0..10.0f64) {
        for kind in [CFunctionKind::Min, CFunctionKind::FischerBurmeister] {
            prop_assert!(kind.value(t, 0.0).abs() <= 1e-12);
            prop_assert!(kind.value(0.0, t).abs() <= 1e-12);
        }
    }

    #[test]
    fn negative_axes_are_not_zeros(t in 1e-6..10.0f64) {
        for kind in [CFunctionKind::Min, CFunctionKind::FischerBurmeister] {
            prop_assert!(kind.value(-t, 0.0).abs() > 1e-12);
            prop_assert!(kind.value(0.0, -t).abs() > 1e-12);
        }
    }

    #[test]
    fn smoothing_error_is_bounded(a in -10.0..10.0f64, b in -10.0..10.0f64, e in 0usize..3) {
        let tau = [1e-4, 1e-6, 1e-8][e];
        let diff = (sfb(tau).value(a, b) - CFunctionKind::FischerBurmeister.value(a, b)).abs();
        prop_assert!(diff <= (2.0 * tau).sqrt() * (1.0 + 1e-12), "{diff}");
    }

    #[test]
    fn smooth_fb_gradient_matches_central_differences(a in edge_value(), b in edge_value(), e in 0usize..3) {
        let tau = [1e-4, 1e-6, 1e-8][e];
        let g = sfb(tau);
        let (ga, gb) = g.gradient(a, b);
        // step well inside the curvature radius sqrt(2 tau)
        let h = 1e-3 * (2.0 * tau).sqrt();
        let fa = (g.value(a + h, b) - g.value(a - h, b)) / (2.0 * h);
        let fb = (g.value(a, b + h) - g.value(a, b - h)) / (2.0 * h);
        let scale = |x: f64, y: f64| x.abs().max(y.abs()).max(1e-3);
        prop_assert!((ga - fa).abs() <= 1e-5 * scale(ga, fa), "d/da {ga} vs {fa}");
        prop_assert!((gb - fb).abs() <= 1e-5 * scale(gb, fb), "d/db {gb} vs {fb}");
    }

    #[test]
    fn zero_smoothing_reduces_to_fb(a in -10.0..10.0f64, b in -10.0..10.0f64) {
        prop_assert_eq!(sfb(0.0).value(a, b), CFunctionKind::FischerBurmeister.value(a, b));
        prop_assert_eq!(sfb(0.0).gradient(a, b), CFunctionKind::FischerBurmeister.gradient(a, b));
        let smooth_min = CFunctionKind::SmoothMin(Smoothing::new(0.0).unwrap());
        prop_assert!((smooth_min.value(a, b) - 2.0 * a.min(b)).abs() <= 1e-12 * (1.0 + a.abs() + b.abs()));
    }

    #[test]
    fn fb_rows_follow_the_subdifferential(a in -5.0..5.0f64, b in -5.0..5.0f64) {
        let da = CellGradient([0.0, -1.0, 0.0]);
        let db = CellGradient([2.0, 3.0, -1.0]);
        let row = constraint_jacobian_row(CFunctionKind::FischerBurmeister, a, b, &da, &db);
        let r = a.hypot(b);
        for k in 0..3 {
            let expected = (a * da.0[k] + b * db.0[k]) / r - (da.0[k] + db.0[k]);
            prop_assert!((row.0[k] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
        }
        let (ca, cb) = CFunctionKind::FischerBurmeister.gradient(a, b);
        prop_assert!(((ca + 1.0).powi(2) + (cb + 1.0).powi(2) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn partition_depends_only_on_sign_of_difference(
        a in prop::collection::vec(-5.0..5.0f64, 1..40),
        shift in -3.0..3.0f64,
        seed in any::<u64>(),
    ) {
        let b: Vec<f64> = a.iter().enumerate().map(|(i, x)| {
            // every third entry is a tie
            if (i as u64 + seed) % 3 == 0 { *x } else { x + ((seed >> (i % 60)) as f64 % 7.0 - 3.0) }
        }).collect();
        let (act, inact) = active_set_partition(&a, &b);
        prop_assert_eq!(act.len() + inact.len(), a.len());
        let mut all: Vec<usize> = act.iter().chain(&inact).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..a.len()).collect::<Vec<_>>());
        for &j in &act { prop_assert!(a[j] >= b[j]); }
        for &j in &inact { prop_assert!(a[j] < b[j]); }
        // a uniform shift keeps every sign of a - b (ties stay ties for these magnitudes)
        let a2: Vec<f64> = a.iter().map(|x| x + shift).collect();
        let b2: Vec<f64> = b.iter().map(|x| x + shift).collect();
        let same_signs = (0..a.len()).all(|j| (a[j] >= b[j]) == (a2[j] >= b2[j]));
        if same_signs {
            prop_assert_eq!(active_set_partition(&a2, &b2).0, act);
        }
    }

    #[test]
    fn violation_is_zero_exactly_on_complementary_pairs(t in 0.0..5.0f64, s in 1e-9..5.0f64) {
        prop_assert_eq!(complementarity_violation(&[t, 0.0], &[0.0, t]), 0.0);
        prop_assert_eq!(complementarity_violation(&[s], &[s]), s);
        prop_assert!(complementarity_violation(&[-s], &[t]) >= s);
    }
}

#[test]
fn axiom_suite_on_grid_plus_axes_and_origin() {
    use rand::{Rng, SeedableRng};
    let start = std::time::Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut pts: Vec<(f64, f64)> = (0..10_000)
        .map(|_| (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)))
        .collect();
    for k in -20..=20 {
        let t = k as f64 * 0.5;
        pts.push((t, 0.0));
        pts.push((0.0, t));
    }
    pts.push((0.0, 0.0));
    for (a, b) in pts {
        for kind in [CFunctionKind::Min, CFunctionKind::FischerBurmeister] {
            let v = c_function(kind, a, b).unwrap();
            assert_eq!(v.abs() <= 1e-12, complementary(a, b), "{kind:?} ({a}, {b})");
        }
    }
    assert!(start.elapsed().as_secs_f64() < 1.0);
}

#[test]
fn documented_examples() {
    assert_eq!(CFunctionKind::Min.value(0.2, 0.0), 0.0);
    assert_eq!(CFunctionKind::FischerBurmeister.value(3.0, 4.0), -2.0);
    assert_eq!(sfb(0.5).value(0.0, 0.0), 1.0);
    assert_eq!(sfb(0.0).value(3.0, 4.0), -2.0);
    assert!((sfb(1e-6).value(0.0, 0.0) - 1.414_213_562_373_095e-3).abs() < 1e-15);
    assert!(c_function(sfb(0.0), 1.0, 1.0).is_ok());
    assert!(Smoothing::new(-1e-9).is_err());
}
