//! LSTM cell with batched sequence forward and backpropagation through time.
//!
//! Gate pre-activations are stacked row-wise as `[input; forget; candidate;
//! output]`, so both weight matrices have `4 * hidden` rows.

use super::{glorot_uniform, sigmoid, FlatParams};
use ndarray::{s, Array1, Array2, Axis};
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// Input weights, `(4 hidden) x input`.
    pub w_ih: Array2<f64>,
    /// Recurrent weights, `(4 hidden) x hidden`.
    pub w_hh: Array2<f64>,
    pub b: Array1<f64>,
    hidden: usize,
    input: usize,
}

/// Per-step forward intermediates for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    pub x: Array2<f64>,
    pub h_prev: Array2<f64>,
    pub c_prev: Array2<f64>,
    pub gate_i: Array2<f64>,
    pub gate_f: Array2<f64>,
    pub gate_g: Array2<f64>,
    pub gate_o: Array2<f64>,
    pub c: Array2<f64>,
    pub tanh_c: Array2<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmGrads {
    pub dw_ih: Array2<f64>,
    pub dw_hh: Array2<f64>,
    pub db: Array1<f64>,
}

impl LstmCell {
    pub fn new<R: Rng>(rng: &mut R, input: usize, hidden: usize) -> Self {
        LstmCell {
            w_ih: glorot_uniform(rng, 4 * hidden, input),
            w_hh: glorot_uniform(rng, 4 * hidden, hidden),
            b: Array1::zeros(4 * hidden),
            hidden,
            input,
        }
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn zero_state(&self, batch: usize) -> (Array2<f64>, Array2<f64>) {
        (
            Array2::zeros((self.hidden, batch)),
            Array2::zeros((self.hidden, batch)),
        )
    }

    /// One gated recursion step over a batch of columns.
    pub fn step(
        &self,
        x: &Array2<f64>,
        h_prev: &Array2<f64>,
        c_prev: &Array2<f64>,
    ) -> (Array2<f64>, Array2<f64>, LstmStepCache) {
        assert_eq!(x.nrows(), self.input, "lstm input dimension mismatch");
        assert_eq!(
            h_prev.nrows(),
            self.hidden,
            "lstm hidden dimension mismatch"
        );
        assert_eq!(c_prev.nrows(), self.hidden, "lstm cell dimension mismatch");

        let mut a = self.w_ih.dot(x) + self.w_hh.dot(h_prev);
        for mut col in a.columns_mut() {
            col += &self.b;
        }
        let h = self.hidden;
        let gate_i = a.slice(s![0..h, ..]).mapv(sigmoid);
        let gate_f = a.slice(s![h..2 * h, ..]).mapv(sigmoid);
        let gate_g = a.slice(s![2 * h..3 * h, ..]).mapv(f64::tanh);
        let gate_o = a.slice(s![3 * h..4 * h, ..]).mapv(sigmoid);

        let c = &gate_f * c_prev + &gate_i * &gate_g;
        let tanh_c = c.mapv(f64::tanh);
        let h_next = &gate_o * &tanh_c;

        let cache = LstmStepCache {
            x: x.clone(),
            h_prev: h_prev.clone(),
            c_prev: c_prev.clone(),
            gate_i,
            gate_f,
            gate_g,
            gate_o,
            c: c.clone(),
            tanh_c,
        };
        (h_next, c, cache)
    }

    /// Run the cell over a sequence (time-major slice of `(input, batch)`
    /// matrices), returning the final hidden state and the step caches.
    pub fn forward_seq(&self, xs: &[Array2<f64>]) -> (Array2<f64>, Vec<LstmStepCache>) {
        assert!(!xs.is_empty(), "empty sequence");
        let batch = xs[0].ncols();
        let (mut h, mut c) = self.zero_state(batch);
        let mut caches = Vec::with_capacity(xs.len());
        for x in xs {
            let (h_next, c_next, cache) = self.step(x, &h, &c);
            h = h_next;
            c = c_next;
            caches.push(cache);
        }
        (h, caches)
    }

    /// Backpropagation through time given the loss gradient at the final
    /// hidden state. Returns parameter gradients and per-step input
    /// gradients (in time order).
    pub fn backward_seq(
        &self,
        caches: &[LstmStepCache],
        dh_last: &Array2<f64>,
    ) -> (LstmGrads, Vec<Array2<f64>>) {
        let batch = dh_last.ncols();
        let mut grads = LstmGrads::zeros_like(self);
        let mut dh = dh_last.clone();
        let mut dc: Array2<f64> = Array2::zeros((self.hidden, batch));
        let mut dxs = vec![Array2::zeros((self.input, batch)); caches.len()];

        for (t, cache) in caches.iter().enumerate().rev() {
            let d_o = &dh * &cache.tanh_c;
            let da_o = &d_o * &cache.gate_o * &cache.gate_o.mapv(|v| 1.0 - v);

            let dc_total = &dc + &(&dh * &cache.gate_o * &cache.tanh_c.mapv(|v| 1.0 - v * v));

            let d_f = &dc_total * &cache.c_prev;
            let da_f = &d_f * &cache.gate_f * &cache.gate_f.mapv(|v| 1.0 - v);
            let d_i = &dc_total * &cache.gate_g;
            let da_i = &d_i * &cache.gate_i * &cache.gate_i.mapv(|v| 1.0 - v);
            let d_g = &dc_total * &cache.gate_i;
            let da_g = &d_g * &cache.gate_g.mapv(|v| 1.0 - v * v);

            let h = self.hidden;
            let mut da = Array2::zeros((4 * h, batch));
            da.slice_mut(s![0..h, ..]).assign(&da_i);
            da.slice_mut(s![h..2 * h, ..]).assign(&da_f);
            da.slice_mut(s![2 * h..3 * h, ..]).assign(&da_g);
            da.slice_mut(s![3 * h..4 * h, ..]).assign(&da_o);

            grads.dw_ih += &da.dot(&cache.x.t());
            grads.dw_hh += &da.dot(&cache.h_prev.t());
            grads.db += &da.sum_axis(Axis(1));

            dxs[t] = self.w_ih.t().dot(&da);
            dh = self.w_hh.t().dot(&da);
            dc = &dc_total * &cache.gate_f;
        }
        (grads, dxs)
    }
}

impl LstmGrads {
    pub fn zeros_like(cell: &LstmCell) -> Self {
        LstmGrads {
            dw_ih: Array2::zeros(cell.w_ih.dim()),
            dw_hh: Array2::zeros(cell.w_hh.dim()),
            db: Array1::zeros(cell.b.len()),
        }
    }

    pub fn accumulate(&mut self, other: &LstmGrads) {
        self.dw_ih += &other.dw_ih;
        self.dw_hh += &other.dw_hh;
        self.db += &other.db;
    }

    pub fn scale(&mut self, factor: f64) {
        self.dw_ih *= factor;
        self.dw_hh *= factor;
        self.db *= factor;
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        out.extend(self.dw_ih.iter());
        out.extend(self.dw_hh.iter());
        out.extend(self.db.iter());
    }
}

impl FlatParams for LstmCell {
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        vec![
            (
                "w_ih".to_string(),
                vec![self.w_ih.nrows(), self.w_ih.ncols()],
            ),
            (
                "w_hh".to_string(),
                vec![self.w_hh.nrows(), self.w_hh.ncols()],
            ),
            ("b".to_string(), vec![self.b.len()]),
        ]
    }

    fn flatten_params(&self) -> Vec<f64> {
        self.w_ih
            .iter()
            .chain(self.w_hh.iter())
            .chain(self.b.iter())
            .copied()
            .collect()
    }

    fn load_params(&mut self, flat: &[f64]) {
        let (n_ih, n_hh) = (self.w_ih.len(), self.w_hh.len());
        assert_eq!(
            flat.len(),
            n_ih + n_hh + self.b.len(),
            "lstm parameter count mismatch"
        );
        self.w_ih = Array2::from_shape_vec(self.w_ih.dim(), flat[..n_ih].to_vec()).unwrap();
        self.w_hh =
            Array2::from_shape_vec(self.w_hh.dim(), flat[n_ih..n_ih + n_hh].to_vec()).unwrap();
        self.b = Array1::from_vec(flat[n_ih + n_hh..].to_vec());
    }
}
