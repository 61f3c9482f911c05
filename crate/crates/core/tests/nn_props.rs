use proptest::prelude::*;
use rand::Rng;
use racsim::nn::*;
use racsim::rng;

fn dense(input: usize, output: usize, activation: Activation) -> LayerSpec {
    LayerSpec::Dense {
        input,
        output,
        activation,
    }
}

fn smooth(i: u8) -> Activation {
    [Activation::Tanh, Activation::Sigmoid, Activation::Identity][i as usize % 3]
}

fn random_net(seed: u64, width: usize, hidden: usize, acts: (u8, u8)) -> Network {
    let conv = LayerSpec::Conv {
        in_channels: 1,
        out_channels: 2,
        kernel: 2,
        stride: 1,
        input_width: width,
        passthrough: 1,
        activation: smooth(acts.0),
    };
    let out = conv.output_size();
    Network::new(
        vec![conv, dense(out, hidden, smooth(acts.1)), dense(hidden, 2, Activation::Sigmoid)],
        &mut rng::from_seed(seed),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_gradients_match_central_differences(
        seed in any::<u64>(),
        width in 2usize..5,
        hidden in 1usize..6,
        acts in (any::<u8>(), any::<u8>()),
    ) {
        let net = random_net(seed, width, hidden, acts);
        let mut r = rng::from_seed(seed ^ 1);
        let cols = net.input_size();
        let x = Tensor::matrix(2, cols, (0..2 * cols).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let w = Tensor::matrix(2, 2, (0..4).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
        let check = gradient_check(&net, &x, &w, 1e-5).unwrap();
        prop_assert!(check.max_error() < 1e-4, "{check:?}");
    }

    #[test]
    fn soft_update_is_a_convex_combination(a in any::<u64>(), b in any::<u64>(), delta in 0.001f64..=1.0) {
        let layers = vec![dense(4, 3, Activation::Relu), dense(3, 1, Activation::Identity)];
        let current = Network::new(layers.clone(), &mut rng::from_seed(a)).unwrap();
        let mut target = Network::new(layers, &mut rng::from_seed(b)).unwrap();
        let before = target.flat_params();
        soft_update(&mut target, &current, delta).unwrap();
        let after = target.flat_params();
        for ((t0, t1), c) in before.iter().zip(&after).zip(current.flat_params()) {
            let (lo, hi) = (t0.min(c), t0.max(c));
            prop_assert!(*t1 >= lo - 1e-15 && *t1 <= hi + 1e-15);
        }
    }

    #[test]
    fn flops_scale_linearly_in_channels(ci in 1usize..6, co in 1usize..6, width in 3usize..10, kernel in 1usize..3) {
        let conv = |ci, co| LayerSpec::Conv {
            in_channels: ci,
            out_channels: co,
            kernel,
            stride: 1,
            input_width: width,
            passthrough: 0,
            activation: Activation::Relu,
        };
        let base = flops_estimate(&[conv(1, 1)]);
        prop_assert_eq!(flops_estimate(&[conv(ci, co)]), base * (ci * co) as u64);
        prop_assert_eq!(flops_estimate(&[conv(2 * ci, co)]), 2 * flops_estimate(&[conv(ci, co)]));
    }
}

#[test]
fn frozen_network_gives_identical_outputs_across_threads() {
    let net = random_net(3, 4, 5, (0, 1));
    let x = Tensor::matrix(1, net.input_size(), (0..net.input_size()).map(|i| i as f64 / 10.0).collect()).unwrap();
    let reference = net.forward(&x).unwrap();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..4).map(|_| s.spawn(|| net.forward(&x).unwrap())).collect();
        for h in handles {
            assert_eq!(h.join().unwrap(), reference);
        }
    });
}
