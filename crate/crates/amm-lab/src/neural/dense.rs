//! Fully connected layer over column-major batches.

use super::{glorot_uniform, Activation, FlatParams};
use ndarray::{Array1, Array2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// Weight matrix, `out x in`.
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub act: Activation,
}

/// Forward intermediates needed by the backward pass.
#[derive(Debug, Clone)]
pub struct DenseCache {
    pub x: Array2<f64>,
    pub z: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dw: Array2<f64>,
    pub db: Array1<f64>,
}

impl Dense {
    pub fn new<R: Rng>(rng: &mut R, input: usize, output: usize, act: Activation) -> Self {
        Dense {
            w: glorot_uniform(rng, output, input),
            b: Array1::zeros(output),
            act,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.w.nrows()
    }

    /// `y = act(w x + b)` for a batch `x` of shape `(in, batch)`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, DenseCache) {
        assert_eq!(
            x.nrows(),
            self.input_dim(),
            "dense input dimension mismatch"
        );
        let mut z = self.w.dot(x);
        for mut col in z.columns_mut() {
            col += &self.b;
        }
        let y = z.mapv(|v| self.act.apply(v));
        (y, DenseCache { x: x.clone(), z })
    }

    /// Gradients of the loss wrt parameters and input, given `dy = dL/dy`.
    pub fn backward(&self, cache: &DenseCache, dy: &Array2<f64>) -> (DenseGrads, Array2<f64>) {
        assert_eq!(
            dy.dim(),
            cache.z.dim(),
            "dense upstream gradient shape mismatch"
        );
        let dz = dy * &cache.z.mapv(|v| self.act.deriv(v));
        let dw = dz.dot(&cache.x.t());
        let db = dz.sum_axis(Axis(1));
        let dx = self.w.t().dot(&dz);
        (DenseGrads { dw, db }, dx)
    }
}

impl DenseGrads {
    pub fn zeros_like(layer: &Dense) -> Self {
        DenseGrads {
            dw: Array2::zeros(layer.w.dim()),
            db: Array1::zeros(layer.b.len()),
        }
    }

    pub fn accumulate(&mut self, other: &DenseGrads) {
        self.dw += &other.dw;
        self.db += &other.db;
    }

    pub fn scale(&mut self, factor: f64) {
        self.dw *= factor;
        self.db *= factor;
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend(self.dw.iter());
        out.extend(self.db.iter());
    }
}

impl FlatParams for Dense {
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        vec![
            ("w".to_string(), vec![self.w.nrows(), self.w.ncols()]),
            ("b".to_string(), vec![self.b.len()]),
        ]
    }

    fn flatten_params(&self) -> Vec<f64> {
        self.w.iter().chain(self.b.iter()).copied().collect()
    }

    fn load_params(&mut self, flat: &[f64]) {
        let nw = self.w.len();
        assert_eq!(
            flat.len(),
            nw + self.b.len(),
            "dense parameter count mismatch"
        );
        self.w = Array2::from_shape_vec(self.w.dim(), flat[..nw].to_vec()).unwrap();
        self.b = Array1::from_vec(flat[nw..].to_vec());
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{finite_diff_grad, grad_check};
    use approx::assert_relative_eq;
    use ndarray::arr2;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_layer_maps_to_zero() {
        let layer = Dense {
            w: Array2::zeros((3, 2)),
            b: Array1::zeros(3),
            act: Activation::LeakyRelu,
        };
        let x = arr2(&[[1.0], [-2.0]]);
        let (y, _) = layer.forward(&x);
        assert!(y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identity_layer_passes_through() {
        let layer = Dense {
            w: Array2::eye(3),
            b: Array1::zeros(3),
            act: Activation::Linear,
        };
        let x = arr2(&[[1.0, 4.0], [-2.0, 5.0], [3.0, -6.0]]);
        let (y, _) = layer.forward(&x);
        assert_eq!(y, x);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut layer = Dense::new(&mut rng, 3, 4, Activation::LeakyRelu);
        let x = arr2(&[[0.3, -0.5], [1.2, 0.4], [-0.7, 0.9]]);
        let target = arr2(&[[0.1, 0.0], [0.4, -0.2], [-0.3, 0.6], [0.2, 0.2]]);

        // Loss: 0.5 * sum((y - target)^2).
        let (y, cache) = layer.forward(&x);
        let dy = &y - &target;
        let (grads, _) = layer.backward(&cache, &dy);
        let mut analytic = Vec::new();
        grads.flatten_into(&mut analytic);

        let params = layer.flatten_params();
        let numeric = finite_diff_grad(
            &mut |p: &[f64]| {
                layer.load_params(p);
                let (y, _) = layer.forward(&x);
                0.5 * (&y - &target).mapv(|v| v * v).sum()
            },
            &params,
            1e-5,
        );
        layer.load_params(&params);
        let report = grad_check(&layer.param_blocks(), &analytic, &numeric, 1e-4);
        assert!(report.passed(), "dense grad check failed: {report}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layer = Dense::new(&mut rng, 3, 2, Activation::LeakyRelu);
        let x = arr2(&[[0.3], [1.2], [-0.7]]);
        let (y, cache) = layer.forward(&x);
        let dy = Array2::from_elem(y.dim(), 1.0);
        let (_, dx) = layer.backward(&cache, &dy);

        let h = 1e-6;
        for i in 0..3 {
            let mut xp = x.clone();
            xp[(i, 0)] += h;
            let mut xm = x.clone();
            xm[(i, 0)] -= h;
            let fp = layer.forward(&xp).0.sum();
            let fm = layer.forward(&xm).0.sum();
            assert_relative_eq!(dx[(i, 0)], (fp - fm) / (2.0 * h), max_relative = 1e-6);
        }
    }
}
