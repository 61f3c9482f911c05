use proptest::prelude::*;
use racsim::env::{AcbVector, ClassConfig};
use racsim::rl::*;
use racsim::rng;

fn classes(r: &[f64]) -> Vec<ClassConfig> {
    r.iter()
        .map(|&s| ClassConfig {
            n_members: 10,
            priority_score: s,
            activation_prob: 0.5,
        })
        .collect()
}

fn state(levels: Vec<usize>, bin: usize) -> DiscreteState {
    DiscreteState {
        quantized_action: levels,
        quantized_accuracy: bin,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn q_values_stay_within_the_contraction_bound(
        seed in any::<u64>(),
        u_min in -50.0f64..0.0,
        width in 0.0f64..100.0,
        discount in 0.0f64..0.95,
    ) {
        let cfg = RlConfig { discount, ..RlConfig::default() };
        let mut q = QTable::new(&cfg, 2).unwrap();
        let u_max = u_min + width;
        let lo = (u_min / (1.0 - discount)).min(0.0);
        let hi = (u_max / (1.0 - discount)).max(0.0);
        let mut r = rng::from_seed(seed);
        use rand::Rng;
        let mut s = state(vec![5, 5], 4);
        for _ in 0..2000 {
            let (a, p) = select_action(&q, &s, 0.5, &mut r).unwrap();
            let next = quantize_state(&p, r.random::<f64>(), &cfg);
            let u = r.random_range(u_min..=u_max);
            update_q(&mut q, &s, a, u, &next, &cfg).unwrap();
            s = next;
        }
        for &v in &q.values {
            prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn greedy_choice_is_deterministic_for_a_fixed_tie_seed(
        values in prop::collection::vec(-3i32..3, 25 * 25 * 5),
        levels in prop::collection::vec(1usize..=5, 2),
        bin in 0usize..5,
        seed in any::<u64>(),
    ) {
        let cfg = RlConfig::default();
        let mut q = QTable::new(&cfg, 2).unwrap();
        q.values = values.iter().map(|&v| f64::from(v)).collect();
        let s = state(levels, bin);
        let a = select_action(&q, &s, 0.0, &mut rng::from_seed(seed)).unwrap();
        let b = select_action(&q, &s, 0.0, &mut rng::from_seed(seed)).unwrap();
        prop_assert_eq!(&a, &b);
        let idx = q.state_index(&s).unwrap();
        prop_assert!(q.argmax_set(idx).contains(&a.0));
    }

    #[test]
    fn utility_falls_strictly_as_rho1_rises(
        p in prop::collection::vec(0.0f64..=1.0, 2..5),
        c in 0.0f64..=1.0,
        rho1 in 0.0f64..200.0,
        extra in 0.1f64..50.0,
    ) {
        prop_assume!(variance(&p) > 1e-9);
        let cls = classes(&vec![1.0; p.len()]);
        let counts = vec![10.0; p.len()];
        let acb = AcbVector::new(p).unwrap();
        let u1 = utility(c, &acb, &cls, &counts, &UtilityParams { rho1, rho2: 5.0 });
        let u2 = utility(c, &acb, &cls, &counts, &UtilityParams { rho1: rho1 + extra, rho2: 5.0 });
        prop_assert!(u2 < u1);
    }

    #[test]
    fn action_indices_round_trip(index in 0usize..125, x1 in 2usize..6) {
        let n = x1.pow(3);
        let index = index % n;
        let levels = action_levels(index, x1, 3);
        prop_assert!(levels.iter().all(|&l| (1..=x1).contains(&l)));
        prop_assert_eq!(action_index(&levels, x1), index);
        let p = action_vector(index, x1, 3);
        prop_assert!(p.factors.iter().all(|&f| f > 0.0 && f <= 1.0));
    }
}
