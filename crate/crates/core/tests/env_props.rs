use proptest::prelude::*;
use racsim::env::*;
use racsim::rng;

fn two_class(n_each: usize, m: usize, k: usize) -> NetworkConfig {
    let mut cfg = NetworkConfig::single_class(2 * n_each, m, k, 0.4);
    cfg.classes = vec![
        ClassConfig {
            n_members: n_each,
            priority_score: 1.0,
            activation_prob: 0.3,
        },
        ClassConfig {
            n_members: n_each,
            priority_score: 2.0,
            activation_prob: 0.6,
        },
    ];
    cfg
}

fn activity(bits: &[bool]) -> ActivityVector {
    let support: Vec<usize> = bits.iter().enumerate().filter_map(|(i, &b)| b.then_some(i)).collect();
    ActivityVector::from_support(bits.len(), &support)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn barring_keeps_a_subset_and_is_monotone_in_p(
        bits in prop::collection::vec(any::<bool>(), 16),
        q in prop::collection::vec(0.0f64..1.0, 16),
        p in prop::collection::vec(0.0f64..=1.0, 2),
        bump in prop::collection::vec(0.0f64..=1.0, 2),
    ) {
        let cfg = two_class(8, 8, 1);
        let act = activity(&bits);
        let lo = AcbVector::new(p.clone()).unwrap();
        let hi = AcbVector::new(p.iter().zip(&bump).map(|(a, b)| (a + b).min(1.0)).collect()).unwrap();
        let pass_lo = acb_check_with_draws(&act, &lo, &cfg.class_map(), &q);
        let pass_hi = acb_check_with_draws(&act, &hi, &cfg.class_map(), &q);
        prop_assert!(pass_lo.is_subset_of(&act));
        prop_assert!(pass_hi.is_subset_of(&act));
        prop_assert!(pass_lo.is_subset_of(&pass_hi));
    }

    #[test]
    fn noiseless_measurement_is_additive_over_disjoint_supports(
        seed in any::<u64>(),
        split in prop::collection::vec(0u8..3, 12),
    ) {
        let mut cfg = NetworkConfig::single_class(12, 6, 3, 0.5);
        cfg.noise_variance = 0.0;
        let ch = generate_channel(&cfg, &mut rng::from_seed(seed));
        let a: Vec<usize> = (0..12).filter(|&i| split[i] == 1).collect();
        let b: Vec<usize> = (0..12).filter(|&i| split[i] == 2).collect();
        let both: Vec<usize> = (0..12).filter(|&i| split[i] != 0).collect();
        let mut r = rng::from_seed(0);
        let ya = synthesize_measurement(&ch, &ActivityVector::from_support(12, &a), &cfg, &mut r).unwrap();
        let yb = synthesize_measurement(&ch, &ActivityVector::from_support(12, &b), &cfg, &mut r).unwrap();
        let yab = synthesize_measurement(&ch, &ActivityVector::from_support(12, &both), &cfg, &mut r).unwrap();
        for k in 0..3 {
            let diff = (&ya.y[k] + &yb.y[k] - &yab.y[k]).norm();
            prop_assert!(diff < 1e-12, "subcarrier {k}: {diff}");
        }
    }

    #[test]
    fn handshake_accuracy_is_a_fraction_and_counts_only_passed_users(
        passed_bits in prop::collection::vec(any::<bool>(), 16),
        detected in prop::collection::vec(0usize..16, 0..20),
        p in prop::collection::vec(0.0f64..=1.0, 2),
        counts in prop::collection::vec(0.0f64..10.0, 2),
    ) {
        let cfg = two_class(8, 8, 1);
        let passed = activity(&passed_bits);
        let out = handshake(&detected, &passed, &AcbVector::new(p).unwrap(), &counts, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&out.accuracy));
        let truly = detected.iter().filter(|&&n| passed_bits[n]).collect::<std::collections::BTreeSet<_>>().len();
        prop_assert_eq!(out.n_valid, truly);
        prop_assert!(out.n_valid <= passed.count());
    }

    #[test]
    fn same_seed_gives_identical_draws(seed in any::<u64>()) {
        let mut cfg = two_class(6, 4, 2);
        cfg.noise_variance = 0.05;
        let draw = |s: u64| {
            let mut r = rng::from_seed(s);
            let ch = generate_channel(&cfg, &mut r);
            let act = draw_activity(&cfg, &mut r);
            let y = synthesize_measurement(&ch, &act, &cfg, &mut r).unwrap();
            (ch.h, ch.preambles, act, y)
        };
        let (h1, l1, a1, y1) = draw(seed);
        let (h2, l2, a2, y2) = draw(seed);
        prop_assert_eq!(h1, h2);
        prop_assert_eq!(l1, l2);
        prop_assert_eq!(a1, a2);
        prop_assert_eq!(y1, y2);
    }
}

#[test]
fn barring_with_real_draws_is_a_subset() {
    let cfg = two_class(16, 8, 1);
    let mut r = rng::from_seed(11);
    for _ in 0..200 {
        let act = draw_activity(&cfg, &mut r);
        let passed = acb_check(&act, &AcbVector::new(vec![0.3, 0.8]).unwrap(), &cfg, &mut r).unwrap();
        assert!(passed.is_subset_of(&act));
    }
}
