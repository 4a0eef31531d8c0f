#![allow(dead_code)]

use ndarray::{Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wildfire_core::nn::{LossKind, Network, Tensor};

pub const H: f64 = 1e-5;
/// Denominator floor for the relative error of near-zero gradients.
pub const FLOOR: f64 = 1e-6;
pub const REL_TOL: f64 = 1e-4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_like(shape: &[usize], rng: &mut ChaCha8Rng) -> Tensor {
    match shape {
        [a, b] => Tensor::Matrix(Array2::from_shape_simple_fn((*a, *b), || rng.random())),
        [a, b, c] => Tensor::Sequence(Array3::from_shape_simple_fn((*a, *b, *c), || rng.random())),
        _ => unreachable!("tensors are 2-D or 3-D"),
    }
}

/// Count of parameters whose analytic gradient agrees with a central
/// difference within [`REL_TOL`], and the parameter count.
///
/// Parameters are jittered first so no unit sits exactly on a ReLU kink.
pub fn gradient_agreement(
    net: &mut Network,
    x: &Tensor,
    target: &Tensor,
    loss: LossKind,
    rng: &mut ChaCha8Rng,
) -> (usize, usize) {
    let mut params = net.flat_params();
    for p in params.iter_mut() {
        *p += rng.random_range(-0.1..0.1);
    }
    net.set_flat_params(&params).unwrap();

    let (out, tape) = net.forward_train(x).unwrap();
    let (_, d_out) = loss.value_and_grad(target, &out).unwrap();
    let analytic = net.backward(&tape, &d_out).unwrap().flatten();

    let mut good = 0;
    let mut shifted = params.clone();
    for i in 0..params.len() {
        shifted[i] = params[i] + H;
        net.set_flat_params(&shifted).unwrap();
        let up = loss.value(target, &net.forward(x).unwrap()).unwrap();
        shifted[i] = params[i] - H;
        net.set_flat_params(&shifted).unwrap();
        let down = loss.value(target, &net.forward(x).unwrap()).unwrap();
        shifted[i] = params[i];
        let numeric = (up - down) / (2.0 * H);
        let a = analytic[i];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
        if rel < REL_TOL {
            good += 1;
        }
    }
    net.set_flat_params(&params).unwrap();
    (good, params.len())
}
