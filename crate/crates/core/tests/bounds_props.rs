use proptest::prelude::*;
use racsim::bounds::*;

fn concave_curve(start: f64, drops: &[f64]) -> LoadCurve {
    // Non-decreasing drops on an even grid give a concave, decreasing curve.
    let mut d = drops.to_vec();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let mut v = start;
    let mut pts = vec![(0.0, v)];
    for (i, step) in d.iter().enumerate() {
        v = (v - step).max(0.0);
        pts.push(((i + 1) as f64 / n as f64, v));
    }
    LoadCurve::from_points(&pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimum_dominates_a_fine_grid(
        start in 0.5f64..=1.0,
        drops in prop::collection::vec(0.0f64..0.2, 2..8),
        r in 0.1f64..3.0,
        n in 1usize..200,
        rho2 in 0.0f64..150.0,
    ) {
        let curve = concave_curve(start, &drops);
        prop_assume!(curve.validate().is_ok());
        let opt = theorem2_optimum(&curve, r, n, rho2).unwrap();
        for i in 0..=1000 {
            let p = i as f64 / 1000.0;
            let u = single_class_utility(&curve, p, r, n, rho2);
            prop_assert!(opt.u_star >= u - 1e-9, "p={p}: {u} > {}", opt.u_star);
        }
    }

    #[test]
    fn fitted_curves_always_validate(
        ys in prop::collection::vec(-0.3f64..1.3, 3..25),
        reps in 1usize..3,
    ) {
        let n = ys.len();
        let samples: Vec<(f64, f64)> = (0..reps)
            .flat_map(|r| ys.iter().enumerate().map(move |(i, &y)| ((i + 1) as f64 / n as f64, y - 0.01 * r as f64)))
            .collect();
        let curve = LoadCurve::fit(&samples).unwrap();
        prop_assert!(curve.validate().is_ok());
        for i in 0..=100 {
            let v = curve.eval(i as f64 / 100.0);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn reported_sparsity_meets_both_conditions(n in 16usize..2048, ratio in 0.1f64..1.0, phi in 1.01f64..4.0) {
        let m = ((n as f64 * ratio) as usize).max(2);
        let params = BoundParams::new(n, m, phi);
        if let Ok(rep) = max_sparsity(&params) {
            let scale = 2.0 * (1.0 / epsilon_n(&params).powi(2) + n as f64).max(m as f64);
            prop_assert!(sparsity_residual(rep.max_sparsity, &params).abs() <= 1e-9 * scale);
            prop_assert_eq!(rep.lower_bound_ok, rep.max_sparsity >= sparsity_lower_bound(&params));
        }
    }

    #[test]
    fn epsilon_shrinks_with_more_users(n in 8usize..10_000, phi in 1.01f64..5.0) {
        let a = BoundParams::new(n, n / 2, phi);
        let b = BoundParams::new(2 * n, n, phi);
        prop_assert!(epsilon_n(&b) < epsilon_n(&a));
    }

    #[test]
    fn theorem1_rises_with_a2(k in 0.5f64..50.0, a2 in 0.01f64..5.0) {
        let lo = BoundParams { a1: 0.7, a2, ..BoundParams::new(256, 128, 2.5) };
        let hi = BoundParams { a2: a2 * 1.5, ..lo };
        prop_assert!(theorem1_bound(k, &hi) >= theorem1_bound(k, &lo));
    }
}

#[test]
fn fit_cut_at_zero_stays_concave() {
    let samples: Vec<(f64, f64)> = (1..=20)
        .map(|i| {
            let p = i as f64 / 20.0;
            (p, (1.4 - 1.6 * p).min(0.75))
        })
        .collect();
    let curve = LoadCurve::fit(&samples).unwrap();
    assert!(curve.validate().is_ok());
    assert!(curve.eval(1.0) == 0.0);
    let zero = curve.extrapolated_zero().or(curve.knots.last().copied()).unwrap();
    assert!((zero - 0.875).abs() < 0.05, "{zero}");
}
