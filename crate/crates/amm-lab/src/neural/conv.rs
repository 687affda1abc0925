//! 1-D convolution over time-major feature windows, stride 1, same padding.

use super::{glorot_uniform, FlatParams};
use ndarray::{Array1, Array2, Array3, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    /// Filters, `out_ch x in_ch x kernel`.
    pub w: Array3<f64>,
    pub b: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dGrads {
    pub dw: Array3<f64>,
    pub db: Array1<f64>,
}

/// Forward intermediates: the input and its unrolled patch matrix.
#[derive(Debug, Clone)]
pub struct Conv1dCache {
    len: usize,
    in_ch: usize,
    cols: Array2<f64>,
}

impl Conv1d {
    pub fn new<R: Rng>(rng: &mut R, in_ch: usize, out_ch: usize, kernel: usize) -> Self {
        assert!(kernel % 2 == 1, "same padding requires an odd kernel");
        let flat = glorot_uniform(rng, out_ch, in_ch * kernel);
        let w = Array3::from_shape_vec((out_ch, in_ch, kernel), flat.iter().copied().collect())
            .unwrap();
        Conv1d {
            w,
            b: Array1::zeros(out_ch),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.w.dim().1
    }

    pub fn out_channels(&self) -> usize {
        self.w.dim().0
    }

    pub fn kernel(&self) -> usize {
        self.w.dim().2
    }

    fn w_mat(&self) -> Array2<f64> {
        let (o, i, k) = self.w.dim();
        self.w.clone().into_shape((o, i * k)).unwrap()
    }

    fn im2col(&self, x: &Array2<f64>) -> Array2<f64> {
        let (len, in_ch) = x.dim();
        let k = self.kernel();
        let pad = k / 2;
        let mut cols = Array2::zeros((len, in_ch * k));
        for t in 0..len {
            for i in 0..in_ch {
                for j in 0..k {
                    let src = t as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < len {
                        cols[(t, i * k + j)] = x[(src as usize, i)];
                    }
                }
            }
        }
        cols
    }

    /// Convolve a `(len, in_ch)` window into `(len, out_ch)`; output length
    /// equals input length under same padding.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, Conv1dCache) {
        assert_eq!(x.ncols(), self.in_channels(), "conv input channel mismatch");
        let cols = self.im2col(x);
        let mut y = cols.dot(&self.w_mat().t());
        for mut row in y.rows_mut() {
            row += &self.b;
        }
        (
            y,
            Conv1dCache {
                len: x.nrows(),
                in_ch: x.ncols(),
                cols,
            },
        )
    }

    pub fn backward(&self, cache: &Conv1dCache, dy: &Array2<f64>) -> (Conv1dGrads, Array2<f64>) {
        assert_eq!(
            dy.dim(),
            (cache.len, self.out_channels()),
            "conv upstream shape mismatch"
        );
        let (o, i, k) = self.w.dim();
        let dw_mat = dy.t().dot(&cache.cols);
        let dw = dw_mat.into_shape((o, i, k)).unwrap();
        let db = dy.sum_axis(Axis(0));

        let dcols = dy.dot(&self.w_mat());
        let pad = k / 2;
        let mut dx = Array2::zeros((cache.len, cache.in_ch));
        for t in 0..cache.len {
            for ch in 0..i {
                for j in 0..k {
                    let src = t as isize + j as isize - pad as isize;
                    if src >= 0 && (src as usize) < cache.len {
                        dx[(src as usize, ch)] += dcols[(t, ch * k + j)];
                    }
                }
            }
        }
        (Conv1dGrads { dw, db }, dx)
    }
}

impl Conv1dGrads {
    pub fn zeros_like(layer: &Conv1d) -> Self {
        Conv1dGrads {
            dw: Array3::zeros(layer.w.dim()),
            db: Array1::zeros(layer.b.len()),
        }
    }

    pub fn accumulate(&mut self, other: &Conv1dGrads) {
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

impl FlatParams for Conv1d {
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        let (o, i, k) = self.w.dim();
        vec![
            ("w".to_string(), vec![o, i, k]),
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
            "conv parameter count mismatch"
        );
        self.w = Array3::from_shape_vec(self.w.dim(), flat[..nw].to_vec()).unwrap();
        self.b = Array1::from_vec(flat[nw..].to_vec());
    }
}
