use proptest::prelude::*;
use rand::Rng;
use racsim::env::AcbVector;
use racsim::nn::Tensor;
use racsim::rng;
use racsim::td3::*;

fn small_cfg() -> Td3Config {
    Td3Config {
        batch_size: 4,
        buffer_capacity: 16,
        hidden: 8,
        conv_channels: 2,
        conv_kernel: 2,
        ..Td3Config::default()
    }
}

fn transition(i: usize) -> Transition {
    Transition {
        state: vec![i as f64],
        action: vec![0.5],
        utility: i as f64,
        next_state: vec![i as f64 + 1.0],
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn buffer_holds_exactly_the_newest_transitions(capacity in 1usize..20, n in 0usize..60) {
        let mut buf = ReplayBuffer::new(capacity).unwrap();
        for i in 0..n {
            buf.push(transition(i));
        }
        prop_assert_eq!(buf.len(), n.min(capacity));
        let kept: Vec<f64> = buf.iter().map(|t| t.utility).collect();
        let expected: Vec<f64> = (n - n.min(capacity)..n).map(|i| i as f64).collect();
        prop_assert_eq!(kept, expected);
    }

    #[test]
    fn smoothing_noise_is_clipped_and_actions_stay_in_range(seed in any::<u64>(), sigma in 0.0f64..5.0, g in 0.0f64..1.0) {
        let cfg = Td3Config { smooth_sigma: sigma, clip_g: g, ..small_cfg() };
        let mut r = rng::from_seed(seed);
        let agent = Td3Agent::new(cfg.clone(), 9, 2, &mut r).unwrap();
        let len = agent.state.len();
        let states = Tensor::matrix(8, len, (0..8 * len).map(|_| r.random_range(-2.0..2.0)).collect()).unwrap();
        let (actions, noise) = target_action(&agent.actor_target, &states, &cfg, &mut r).unwrap();
        prop_assert!(noise.iter().all(|e| e.abs() <= g));
        prop_assert!(actions.data.iter().all(|a| (0.0..=1.0).contains(a)));
    }

    #[test]
    fn targets_use_the_smaller_critic(seed in any::<u64>(), gamma in 0.0f64..1.0) {
        let cfg = small_cfg();
        let mut r = rng::from_seed(seed);
        let agent = Td3Agent::new(cfg, 9, 2, &mut r).unwrap();
        let len = agent.state.len();
        let next = Tensor::matrix(6, len, (0..6 * len).map(|_| r.random_range(0.0..2.0)).collect()).unwrap();
        let acts = Tensor::matrix(6, 2, (0..12).map(|_| r.random::<f64>()).collect()).unwrap();
        let u: Vec<f64> = (0..6).map(|_| r.random_range(-5.0..5.0)).collect();
        let y = target_values(&agent.critic1_target, &agent.critic2_target, &next, &acts, &u, gamma).unwrap();
        let sa = join_state_action(&next, &acts).unwrap();
        let q1 = agent.critic1_target.forward(&sa).unwrap();
        let q2 = agent.critic2_target.forward(&sa).unwrap();
        for i in 0..6 {
            prop_assert!(y[i] <= u[i] + gamma * q1.data[i] + 1e-12);
            prop_assert!(y[i] <= u[i] + gamma * q2.data[i] + 1e-12);
        }
    }

    #[test]
    fn exploratory_actions_are_valid_factors(seed in any::<u64>(), sigma in 0.0f64..100.0) {
        let mut r = rng::from_seed(seed);
        let agent = Td3Agent::new(small_cfg(), 9, 3, &mut r).unwrap();
        let p = policy_action(&agent.actor, &agent.state, sigma, &mut r).unwrap();
        prop_assert!(p.factors.iter().all(|f| (0.0..=1.0).contains(f)));
        prop_assert!(AcbVector::new(p.factors).is_ok());
    }
}

#[test]
fn actor_and_targets_move_only_on_delayed_slots() {
    let cfg = small_cfg();
    let mut r = rng::from_seed(8);
    let mut agent = Td3Agent::new(cfg.clone(), 9, 1, &mut r).unwrap();
    let mut actor_slots = 0u64;
    for slot in 0..60 {
        let a = agent.actor.param_fingerprint();
        let t = [
            agent.actor_target.param_fingerprint(),
            agent.critic1_target.param_fingerprint(),
            agent.critic2_target.param_fingerprint(),
        ];
        let p = agent.act(&mut r).unwrap();
        let mut next = agent.state.clone();
        next[0] = f64::from(slot) / 60.0;
        let report = agent.observe(&p, f64::from(slot % 7), next, &mut r).unwrap();
        let updated = report.is_some_and(|rep| rep.actor_updated);
        actor_slots += u64::from(updated);
        assert_eq!(agent.actor.param_fingerprint() != a, updated, "slot {slot}");
        let t_after = [
            agent.actor_target.param_fingerprint(),
            agent.critic1_target.param_fingerprint(),
            agent.critic2_target.param_fingerprint(),
        ];
        for (before, after) in t.iter().zip(&t_after) {
            assert_eq!(before != after, updated, "slot {slot}");
        }
        assert_eq!(agent.actor_updates, agent.critic_updates / cfg.policy_delay as u64);
    }
    assert_eq!(actor_slots, agent.actor_updates);
    assert!(agent.actor_updates > 10);
}
