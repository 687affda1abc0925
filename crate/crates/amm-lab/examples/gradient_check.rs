//! Finite-difference verification of every layer's analytic gradients, the
//! way the test suite guards the stack.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use amm_lab::neural::{
    finite_diff_grad, grad_check, Activation, Conv1d, Dense, FlatParams, LstmCell,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // Dense layer under a squared loss.
    let mut dense = Dense::new(&mut rng, 4, 3, Activation::LeakyRelu);
    let x = Array2::from_shape_fn((4, 2), |_| rng.gen_range(-1.0..1.0));
    let target = Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0));
    let (y, cache) = dense.forward(&x);
    let (grads, _) = dense.backward(&cache, &(&y - &target));
    let mut analytic = Vec::new();
    grads.flatten_into(&mut analytic);
    let params = dense.flatten_params();
    let numeric = finite_diff_grad(
        &mut |p: &[f64]| {
            dense.load_params(p);
            let (y, _) = dense.forward(&x);
            0.5 * (&y - &target).mapv(|v| v * v).sum()
        },
        &params,
        1e-5,
    );
    dense.load_params(&params);
    println!(
        "dense layer:\n{}",
        grad_check(&dense.param_blocks(), &analytic, &numeric, 1e-4)
    );

    // LSTM over a five-step sequence, backpropagation through time.
    let mut lstm = LstmCell::new(&mut rng, 3, 5);
    let xs: Vec<Array2<f64>> = (0..5)
        .map(|_| Array2::from_shape_fn((3, 2), |_| rng.gen_range(-1.0..1.0)))
        .collect();
    let target = Array2::from_shape_fn((5, 2), |_| rng.gen_range(-1.0..1.0));
    let (h, caches) = lstm.forward_seq(&xs);
    let (grads, _) = lstm.backward_seq(&caches, &(&h - &target));
    let mut analytic = Vec::new();
    grads.flatten_into(&mut analytic);
    let params = lstm.flatten_params();
    let numeric = finite_diff_grad(
        &mut |p: &[f64]| {
            lstm.load_params(p);
            let (h, _) = lstm.forward_seq(&xs);
            0.5 * (&h - &target).mapv(|v| v * v).sum()
        },
        &params,
        1e-5,
    );
    lstm.load_params(&params);
    println!(
        "lstm (bptt):\n{}",
        grad_check(&lstm.param_blocks(), &analytic, &numeric, 1e-4)
    );

    // Same-padding 1-D convolution.
    let mut conv = Conv1d::new(&mut rng, 2, 3, 3);
    let x = Array2::from_shape_fn((6, 2), |_| rng.gen_range(-1.0..1.0));
    let target = Array2::from_shape_fn((6, 3), |_| rng.gen_range(-1.0..1.0));
    let (y, cache) = conv.forward(&x);
    let (grads, _) = conv.backward(&cache, &(&y - &target));
    let mut analytic = Vec::new();
    grads.flatten_into(&mut analytic);
    let params = conv.flatten_params();
    let numeric = finite_diff_grad(
        &mut |p: &[f64]| {
            conv.load_params(p);
            let (y, _) = conv.forward(&x);
            0.5 * (&y - &target).mapv(|v| v * v).sum()
        },
        &params,
        1e-5,
    );
    conv.load_params(&params);
    println!(
        "conv1d:\n{}",
        grad_check(&conv.param_blocks(), &analytic, &numeric, 1e-4)
    );
}
