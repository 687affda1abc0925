//! Dueling deep Q-network: two 1-D convolution layers over the state
//! window, then a value stream and an advantage stream, aggregated as
//! `Q = V + A - mean(A)`. With dueling disabled the advantage stream alone
//! produces the Q-values (the plain D-DQN head).

use super::NUM_ACTIONS;
use crate::neural::{
    Activation, Conv1d, Conv1dCache, Conv1dGrads, Dense, DenseCache, DenseGrads, FlatParams,
    LEAKY_SLOPE,
};
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QNetConfig {
    /// Time length of the state window.
    pub window: usize,
    /// Feature channels per interval.
    pub channels: usize,
    /// Filters in each convolution layer.
    pub conv_filters: usize,
    pub kernel: usize,
    /// Width of the value and advantage streams.
    pub stream_width: usize,
    /// Dueling aggregation on (DD-DQN) or off (D-DQN).
    pub dueling: bool,
}

impl Default for QNetConfig {
    fn default() -> Self {
        QNetConfig {
            window: 50,
            channels: super::env::QNET_CHANNELS,
            conv_filters: 100,
            kernel: 3,
            stream_width: 50,
            dueling: true,
        }
    }
}

/// Aggregate a state value and per-action advantages:
/// `Q(s, a) = V(s) + A(s, a) - mean_a A(s, a)`.
pub fn dueling_q(value: f64, advantages: &Array1<f64>) -> Array1<f64> {
    let mean = advantages.sum() / advantages.len() as f64;
    advantages.mapv(|a| value + a - mean)
}

/// Double-DQN target: the online network picks the argmax action, the target
/// network evaluates it. Terminal transitions bootstrap nothing.
pub fn td_target(
    r: f64,
    gamma: f64,
    terminal: bool,
    q_online_next: &Array1<f64>,
    q_target_next: &Array1<f64>,
) -> f64 {
    if terminal {
        return r;
    }
    let best = q_online_next
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite q-values"))
        .map(|(i, _)| i)
        .expect("non-empty action set");
    r + gamma * q_target_next[best]
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuelingQNet {
    conv1: Conv1d,
    conv2: Conv1d,
    value_hidden: Dense,
    value_out: Dense,
    adv_hidden: Dense,
    adv_out: Dense,
    config: QNetConfig,
}

pub struct QNetCache {
    conv1_cache: Conv1dCache,
    z1: Array2<f64>,
    conv2_cache: Conv1dCache,
    z2: Array2<f64>,
    value_hidden_cache: DenseCache,
    value_out_cache: DenseCache,
    adv_hidden_cache: DenseCache,
    adv_out_cache: DenseCache,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QNetGrads {
    pub conv1: Conv1dGrads,
    pub conv2: Conv1dGrads,
    pub value_hidden: DenseGrads,
    pub value_out: DenseGrads,
    pub adv_hidden: DenseGrads,
    pub adv_out: DenseGrads,
}

impl DuelingQNet {
    pub fn new(config: QNetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat_dim = config.window * config.conv_filters;
        DuelingQNet {
            conv1: Conv1d::new(
                &mut rng,
                config.channels,
                config.conv_filters,
                config.kernel,
            ),
            conv2: Conv1d::new(
                &mut rng,
                config.conv_filters,
                config.conv_filters,
                config.kernel,
            ),
            value_hidden: Dense::new(
                &mut rng,
                flat_dim,
                config.stream_width,
                Activation::LeakyRelu,
            ),
            value_out: Dense::new(&mut rng, config.stream_width, 1, Activation::Linear),
            adv_hidden: Dense::new(
                &mut rng,
                flat_dim,
                config.stream_width,
                Activation::LeakyRelu,
            ),
            adv_out: Dense::new(
                &mut rng,
                config.stream_width,
                NUM_ACTIONS,
                Activation::Linear,
            ),
            config,
        }
    }

    pub fn config(&self) -> &QNetConfig {
        &self.config
    }

    /// Q-values for one state window of shape `(window, channels)`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array1<f64>, QNetCache) {
        assert_eq!(
            x.dim(),
            (self.config.window, self.config.channels),
            "q-net input shape mismatch"
        );
        let (z1, conv1_cache) = self.conv1.forward(x);
        let a1 = z1.mapv(|v| Activation::LeakyRelu.apply(v));
        let (z2, conv2_cache) = self.conv2.forward(&a1);
        let a2 = z2.mapv(|v| Activation::LeakyRelu.apply(v));

        let flat_len = a2.len();
        let flat = a2
            .into_shape((flat_len, 1))
            .expect("contiguous activations");

        let (vh, value_hidden_cache) = self.value_hidden.forward(&flat);
        let (vo, value_out_cache) = self.value_out.forward(&vh);
        let (ah, adv_hidden_cache) = self.adv_hidden.forward(&flat);
        let (ao, adv_out_cache) = self.adv_out.forward(&ah);

        let advantages = ao.column(0).to_owned();
        let q = if self.config.dueling {
            dueling_q(vo[(0, 0)], &advantages)
        } else {
            advantages
        };
        let cache = QNetCache {
            conv1_cache,
            z1,
            conv2_cache,
            z2,
            value_hidden_cache,
            value_out_cache,
            adv_hidden_cache,
            adv_out_cache,
        };
        (q, cache)
    }

    pub fn q_values(&self, x: &Array2<f64>) -> Array1<f64> {
        self.forward(x).0
    }

    pub fn greedy_action(&self, x: &Array2<f64>) -> usize {
        let q = self.q_values(x);
        q.iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite q-values"))
            .map(|(i, _)| i)
            .expect("non-empty action set")
    }

    /// Backpropagate `dq` (one gradient per action) into parameter grads.
    pub fn backward(&self, cache: &QNetCache, dq: &Array1<f64>) -> QNetGrads {
        // Through the aggregation: dV = sum(dq); dA_i = dq_i - mean(dq).
        let (dv, da) = if self.config.dueling {
            let total = dq.sum();
            let mean = total / dq.len() as f64;
            (total, dq.mapv(|g| g - mean))
        } else {
            (0.0, dq.clone())
        };

        let da_col = Array2::from_shape_fn((da.len(), 1), |(i, _)| da[i]);
        let (adv_out_grads, dah) = self.adv_out.backward(&cache.adv_out_cache, &da_col);
        let (adv_hidden_grads, dflat_a) = self.adv_hidden.backward(&cache.adv_hidden_cache, &dah);

        let (value_out_grads, value_hidden_grads, dflat_v) = if self.config.dueling {
            let dv_col = Array2::from_elem((1, 1), dv);
            let (vo_grads, dvh) = self.value_out.backward(&cache.value_out_cache, &dv_col);
            let (vh_grads, dflat_v) = self.value_hidden.backward(&cache.value_hidden_cache, &dvh);
            (vo_grads, vh_grads, Some(dflat_v))
        } else {
            (
                DenseGrads::zeros_like(&self.value_out),
                DenseGrads::zeros_like(&self.value_hidden),
                None,
            )
        };

        let mut dflat = dflat_a;
        if let Some(dv) = dflat_v {
            dflat += &dv;
        }
        let da2 = dflat
            .into_shape((self.config.window, self.config.conv_filters))
            .expect("flat gradient reshapes to window");
        let dz2 = &da2 * &cache.z2.mapv(|v| if v >= 0.0 { 1.0 } else { LEAKY_SLOPE });
        let (conv2_grads, da1) = self.conv2.backward(&cache.conv2_cache, &dz2);
        let dz1 = &da1 * &cache.z1.mapv(|v| if v >= 0.0 { 1.0 } else { LEAKY_SLOPE });
        let (conv1_grads, _) = self.conv1.backward(&cache.conv1_cache, &dz1);

        QNetGrads {
            conv1: conv1_grads,
            conv2: conv2_grads,
            value_hidden: value_hidden_grads,
            value_out: value_out_grads,
            adv_hidden: adv_hidden_grads,
            adv_out: adv_out_grads,
        }
    }
}

impl QNetGrads {
    pub fn zeros_like(net: &DuelingQNet) -> Self {
        QNetGrads {
            conv1: Conv1dGrads::zeros_like(&net.conv1),
            conv2: Conv1dGrads::zeros_like(&net.conv2),
            value_hidden: DenseGrads::zeros_like(&net.value_hidden),
            value_out: DenseGrads::zeros_like(&net.value_out),
            adv_hidden: DenseGrads::zeros_like(&net.adv_hidden),
            adv_out: DenseGrads::zeros_like(&net.adv_out),
        }
    }

    pub fn accumulate(&mut self, other: &QNetGrads) {
        self.conv1.accumulate(&other.conv1);
        self.conv2.accumulate(&other.conv2);
        self.value_hidden.accumulate(&other.value_hidden);
        self.value_out.accumulate(&other.value_out);
        self.adv_hidden.accumulate(&other.adv_hidden);
        self.adv_out.accumulate(&other.adv_out);
    }

    pub fn scale(&mut self, factor: f64) {
        self.conv1.scale(factor);
        self.conv2.scale(factor);
        self.value_hidden.scale(factor);
        self.value_out.scale(factor);
        self.adv_hidden.scale(factor);
        self.adv_out.scale(factor);
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        self.conv1.flatten_into(out);
        self.conv2.flatten_into(out);
        self.value_hidden.flatten_into(out);
        self.value_out.flatten_into(out);
        self.adv_hidden.flatten_into(out);
        self.adv_out.flatten_into(out);
    }
}

impl FlatParams for DuelingQNet {
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        let mut blocks = Vec::new();
        let mut push = |prefix: &str, layer_blocks: Vec<(String, Vec<usize>)>| {
            for (name, shape) in layer_blocks {
                blocks.push((format!("{prefix}.{name}"), shape));
            }
        };
        push("conv1", self.conv1.param_blocks());
        push("conv2", self.conv2.param_blocks());
        push("value_hidden", self.value_hidden.param_blocks());
        push("value_out", self.value_out.param_blocks());
        push("adv_hidden", self.adv_hidden.param_blocks());
        push("adv_out", self.adv_out.param_blocks());
        blocks
    }

    fn flatten_params(&self) -> Vec<f64> {
        let mut flat = self.conv1.flatten_params();
        flat.extend(self.conv2.flatten_params());
        flat.extend(self.value_hidden.flatten_params());
        flat.extend(self.value_out.flatten_params());
        flat.extend(self.adv_hidden.flatten_params());
        flat.extend(self.adv_out.flatten_params());
        flat
    }

    fn load_params(&mut self, flat: &[f64]) {
        let mut offset = 0;
        let mut take = |n: usize| {
            let slice = &flat[offset..offset + n];
            offset += n;
            slice
        };
        let n = self.conv1.num_params();
        self.conv1.load_params(take(n));
        let n = self.conv2.num_params();
        self.conv2.load_params(take(n));
        let n = self.value_hidden.num_params();
        self.value_hidden.load_params(take(n));
        let n = self.value_out.num_params();
        self.value_out.load_params(take(n));
        let n = self.adv_hidden.num_params();
        self.adv_hidden.load_params(take(n));
        let n = self.adv_out.num_params();
        self.adv_out.load_params(take(n));
        assert_eq!(offset, flat.len(), "q-net parameter count mismatch");
    }
}
