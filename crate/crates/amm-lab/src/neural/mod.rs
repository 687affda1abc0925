//! Minimal self-contained neural stack: dense layers, an LSTM cell, leaky
//! ReLU, 1-D convolution, the Adam optimizer, and finite-difference gradient
//! verification. Double precision throughout; batches are stored one sample
//! per column.

mod adam;
mod checkpoint;
mod conv;
mod dense;
mod gradcheck;
mod lstm;

pub use adam::Adam;
pub use checkpoint::{
    Checkpoint, CheckpointError, TensorBlock, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use conv::{Conv1d, Conv1dCache, Conv1dGrads};
pub use dense::{Dense, DenseCache, DenseGrads};
pub use gradcheck::{finite_diff_grad, grad_check, BlockReport, GradCheckReport};
pub use lstm::{LstmCell, LstmGrads, LstmStepCache};

use ndarray::Array2;
use rand::Rng;

/// Negative-side slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.01;

/// Leaky rectified linear unit: `x` for `x >= 0`, `slope * x` otherwise.
pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

fn leaky_relu_deriv(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        slope
    }
}

/// Pointwise activation applied by a layer after its affine map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    LeakyRelu,
    Linear,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => leaky_relu(z, LEAKY_SLOPE),
            Activation::Linear => z,
        }
    }

    pub fn deriv(self, z: f64) -> f64 {
        match self {
            Activation::LeakyRelu => leaky_relu_deriv(z, LEAKY_SLOPE),
            Activation::Linear => 1.0,
        }
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Uniform init in `[-limit, limit]` with `limit = sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot_uniform<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Array2<f64> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

/// Networks expose their parameters as one flat vector with a stable block
/// layout, used by the optimizer, gradient checks, and checkpoints.
pub trait FlatParams {
    /// Block names and shapes, in flattening order.
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)>;
    fn flatten_params(&self) -> Vec<f64>;
    /// Load a flat vector produced by [`FlatParams::flatten_params`].
    fn load_params(&mut self, flat: &[f64]);

    fn num_params(&self) -> usize {
        self.param_blocks()
            .iter()
            .map(|(_, shape)| shape.iter().product::<usize>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaky_relu_values() {
        assert_eq!(leaky_relu(2.0, 0.01), 2.0);
        assert_eq!(leaky_relu(-1.0, 0.01), -0.01);
        assert_eq!(leaky_relu(0.0, 0.01), 0.0);
    }

    #[test]
    fn leaky_relu_monotone_and_continuous_at_zero() {
        let mut prev = f64::NEG_INFINITY;
        for i in -1000..=1000 {
            let x = i as f64 / 100.0;
            let y = leaky_relu(x, LEAKY_SLOPE);
            assert!(y >= prev);
            prev = y;
        }
        assert!(leaky_relu(1e-12, LEAKY_SLOPE).abs() < 1e-11);
        assert!(leaky_relu(-1e-12, LEAKY_SLOPE).abs() < 1e-11);
    }

    #[test]
    fn sigmoid_is_stable_in_tails() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(800.0) <= 1.0);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((sigmoid(3.0) + sigmoid(-3.0) - 1.0).abs() < 1e-15);
    }
}
