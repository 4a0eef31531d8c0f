use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wildfire_core::nn::{Activation, LayerSpec, LossKind, Network, NetworkSpec, Tensor};

mod common;

fn pick_activation(rng: &mut impl Rng, allow_softmax: bool) -> Activation {
    let options: &[Activation] = if allow_softmax {
        &[
            Activation::Tanh,
            Activation::Sigmoid,
            Activation::Relu,
            Activation::Identity,
            Activation::Softmax,
        ]
    } else {
        &[
            Activation::Tanh,
            Activation::Sigmoid,
            Activation::Relu,
            Activation::Identity,
        ]
    };
    options[rng.random_range(0..options.len())]
}

fn dense_case(rng: &mut ChaCha8Rng) -> (NetworkSpec, Tensor) {
    let input_dim = rng.random_range(1..=6);
    let depth = rng.random_range(1..=4);
    let layers = (0..depth)
        .map(|_| LayerSpec::Dense {
            units: rng.random_range(1..=16),
            activation: pick_activation(rng, true),
        })
        .collect();
    let x = Array2::from_shape_simple_fn((5, input_dim), || rng.random::<f64>());
    (NetworkSpec { input_dim, layers }, Tensor::Matrix(x))
}

fn lstm_case(rng: &mut ChaCha8Rng) -> (NetworkSpec, Tensor) {
    let input_dim = rng.random_range(1..=5);
    let steps = rng.random_range(2..=4);
    let mut u = || rng.random_range(1..=16);
    let (u1, u2) = (u(), u());
    let layers = vec![
        LayerSpec::Lstm {
            units: u1,
            activation: Activation::Tanh,
            return_sequences: false,
        },
        LayerSpec::RepeatVector { times: steps },
        LayerSpec::Lstm {
            units: u2,
            activation: Activation::Tanh,
            return_sequences: true,
        },
        LayerSpec::Dense {
            units: input_dim,
            activation: Activation::Identity,
        },
    ];
    let x = Array3::from_shape_simple_fn((3, steps, input_dim), || rng.random::<f64>());
    (NetworkSpec { input_dim, layers }, Tensor::Sequence(x))
}

fn agreement(spec: &NetworkSpec, x: &Tensor, seed: u64, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut net = Network::build(spec, seed).unwrap();
    let out = net.forward(x).unwrap();
    let target = common::random_like(&out.shape(), rng);
    common::gradient_agreement(&mut net, x, &target, LossKind::Mse, rng)
}

#[test]
fn dense_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut good, mut total) = (0, 0);
    for seed in 0..25 {
        let (spec, x) = dense_case(&mut rng);
        let (g, t) = agreement(&spec, &x, seed, &mut rng);
        good += g;
        total += t;
    }
    let frac = good as f64 / total as f64;
    assert!(frac > 0.99, "{good}/{total} parameters agree");
}

#[test]
fn lstm_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut good, mut total) = (0, 0);
    for seed in 0..10 {
        let (spec, x) = lstm_case(&mut rng);
        let (g, t) = agreement(&spec, &x, seed, &mut rng);
        good += g;
        total += t;
    }
    let frac = good as f64 / total as f64;
    assert!(frac > 0.99, "{good}/{total} parameters agree");
}

#[test]
fn lstm_activation_variants_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for activation in [Activation::Relu, Activation::Sigmoid, Activation::Identity] {
        let spec = NetworkSpec {
            input_dim: 3,
            layers: vec![
                LayerSpec::Lstm {
                    units: 6,
                    activation,
                    return_sequences: true,
                },
                LayerSpec::Lstm {
                    units: 4,
                    activation,
                    return_sequences: false,
                },
            ],
        };
        let x = Tensor::Sequence(Array3::from_shape_simple_fn((2, 4, 3), || rng.random()));
        let (g, t) = agreement(&spec, &x, 5, &mut rng);
        assert!(g as f64 / t as f64 > 0.99, "{activation:?}: {g}/{t}");
    }
}
