//! LSTM forecaster producing the predicted forward valuation from a sliding
//! window of `(v_obs, tau, epsilon)` features.
//!
//! The training objective per sample is the absolute prediction error plus
//! the expected load at the sample's valuation. The expected-load term does
//! not depend on the network parameters, so it is reported in the loss curve
//! but contributes no gradient; the supervised target is the equilibrium
//! valuation `horizon` intervals ahead.

use crate::amm::{equilibrium_valuation, BondingCurve, Valuation};
use crate::market::PriceSeries;
use crate::neural::{Activation, Adam, Checkpoint, CheckpointError, Dense, FlatParams, LstmCell};
use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt;

/// Feature columns per interval: observed valuation, alternative-data
/// signal, agent input parameter.
pub const FEATURES: usize = 3;

#[derive(Debug)]
pub enum PredictorError {
    /// `make_window` needs `window` full intervals of history.
    InsufficientHistory {
        t: usize,
        window: usize,
    },
    SeriesTooShort {
        len: usize,
        needed: usize,
    },
    InvalidConfig(String),
    InvalidFeature(String),
    Checkpoint(CheckpointError),
}

impl fmt::Display for PredictorError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PredictorError::InsufficientHistory { t, window } => {
                write!(
                    f,
                    "window of {window} intervals unavailable at position {t}"
                )
            }
            PredictorError::SeriesTooShort { len, needed } => {
                write!(
                    f,
                    "series of {len} ticks is shorter than the {needed} required"
                )
            }
            PredictorError::InvalidConfig(msg) => write!(f, "invalid predictor config: {msg}"),
            PredictorError::InvalidFeature(msg) => write!(f, "invalid feature: {msg}"),
            PredictorError::Checkpoint(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for PredictorError {}

impl From<CheckpointError> for PredictorError {
    fn from(e: CheckpointError) -> Self {
        PredictorError::Checkpoint(e)
    }
}

/// Architecture and training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictorConfig {
    /// Sliding-window length in intervals.
    pub window: usize,
    /// LSTM hidden width.
    pub hidden: usize,
    /// Prediction horizon in intervals ahead.
    pub horizon: usize,
    pub epochs: usize,
    pub batch: usize,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            window: 50,
            hidden: 100,
            horizon: 5,
            epochs: 50,
            batch: 50,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<(), PredictorError> {
        if self.horizon < 1 || self.window < self.horizon {
            return Err(PredictorError::InvalidConfig(format!(
                "need window >= horizon >= 1, got window {} horizon {}",
                self.window, self.horizon
            )));
        }
        if self.hidden == 0 || self.batch == 0 || self.epochs == 0 {
            return Err(PredictorError::InvalidConfig(
                "hidden, batch, and epochs must be positive".to_string(),
            ));
        }
        Ok(())
    }
}

/// `window x 3` feature matrix, rows in time order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureWindow {
    data: Array2<f64>,
}

impl FeatureWindow {
    pub fn from_rows(data: Array2<f64>) -> Result<Self, PredictorError> {
        if data.ncols() != FEATURES {
            return Err(PredictorError::InvalidFeature(format!(
                "expected {FEATURES} feature columns, got {}",
                data.ncols()
            )));
        }
        for row in data.rows() {
            let (v, tau, eps) = (row[0], row[1], row[2]);
            if !v.is_finite() || v <= 0.0 || v >= 1.0 {
                return Err(PredictorError::InvalidFeature(format!(
                    "v_obs {v} outside (0, 1)"
                )));
            }
            if !(-1.0..=1.0).contains(&tau) {
                return Err(PredictorError::InvalidFeature(format!(
                    "tau {tau} outside [-1, 1]"
                )));
            }
            if !eps.is_finite() || eps <= -1.0 || eps >= 1.0 {
                return Err(PredictorError::InvalidFeature(format!(
                    "epsilon {eps} outside (-1, 1)"
                )));
            }
        }
        Ok(FeatureWindow { data })
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.data.nrows() == 0
    }
}

/// Assemble the feature window ending at series position `t`. Epsilon rows
/// come from `eps_history` (indexed by position, zero where the agent took
/// no action or the slice is short).
pub fn make_window(
    series: &PriceSeries,
    eps_history: &[f64],
    t: usize,
    window: usize,
) -> Result<FeatureWindow, PredictorError> {
    if t + 1 < window || t >= series.len() {
        return Err(PredictorError::InsufficientHistory { t, window });
    }
    let start = t + 1 - window;
    let data = Array2::from_shape_fn((window, FEATURES), |(row, col)| {
        let pos = start + row;
        match col {
            0 => series.tick(pos).v_obs.value(),
            1 => series.tick(pos).tau,
            _ => eps_history.get(pos).copied().unwrap_or(0.0),
        }
    });
    FeatureWindow::from_rows(data)
}

/// The forecaster: one LSTM layer and a linear head squashed through a
/// logistic so the prediction stays a valuation.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictor {
    lstm: LstmCell,
    head: Dense,
    config: PredictorConfig,
}

/// Per-epoch training statistics; `loss_eq4` is the sum of the two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_abs_err: f64,
    pub mean_expected_load: f64,
    pub loss_eq4: f64,
}

/// Materialized supervised samples: window positions, targets, and the
/// parameter-independent expected-load term per sample.
#[derive(Debug, Clone)]
pub struct SupervisedDataset {
    windows: Vec<Array2<f64>>,
    targets: Vec<f64>,
    expected_loads: Vec<f64>,
}

impl SupervisedDataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn mean_expected_load(&self) -> f64 {
        if self.expected_loads.is_empty() {
            0.0
        } else {
            self.expected_loads.iter().sum::<f64>() / self.expected_loads.len() as f64
        }
    }
}

/// Slide a window over the series and pair it with the equilibrium valuation
/// `horizon` intervals ahead. `expected_load_at` supplies the expected-load
/// term for the valuation at the window's end.
pub fn build_dataset(
    series: &PriceSeries,
    config: &PredictorConfig,
    mut expected_load_at: impl FnMut(Valuation) -> f64,
) -> Result<SupervisedDataset, PredictorError> {
    config.validate()?;
    let needed = config.window + config.horizon;
    if series.len() < needed {
        return Err(PredictorError::SeriesTooShort {
            len: series.len(),
            needed,
        });
    }
    let curve = BondingCurve::new(1.0).expect("unit curve");
    let mut windows = Vec::new();
    let mut targets = Vec::new();
    let mut expected_loads = Vec::new();
    for t in (config.window - 1)..(series.len() - config.horizon) {
        let window = make_window(series, &[], t, config.window)?;
        let v_now = series.tick(t).v_obs;
        let v_future = series.tick(t + config.horizon).v_obs;
        let target = equilibrium_valuation(&curve, v_future)
            .map_err(|e| PredictorError::InvalidFeature(e.to_string()))?;
        windows.push(window.data);
        targets.push(target.value());
        expected_loads.push(expected_load_at(v_now));
    }
    Ok(SupervisedDataset {
        windows,
        targets,
        expected_loads,
    })
}

impl Predictor {
    pub fn new(config: PredictorConfig, seed: u64) -> Result<Self, PredictorError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(Predictor {
            lstm: LstmCell::new(&mut rng, FEATURES, config.hidden),
            head: Dense::new(&mut rng, config.hidden, 1, Activation::Linear),
            config,
        })
    }

    pub fn config(&self) -> &PredictorConfig {
        &self.config
    }

    /// Retarget the training schedule (epoch count and batch size) without
    /// touching the architecture; used when resuming under a new config.
    pub fn set_training_schedule(&mut self, epochs: usize, batch: usize) {
        self.config.epochs = epochs;
        self.config.batch = batch;
    }

    /// Forward a batch of windows; returns predictions in (0, 1).
    fn predict_batch(&self, windows: &[&Array2<f64>]) -> Array1<f64> {
        let (h, _) = self.lstm.forward_seq(&self.steps_of(windows));
        let (z, _) = self.head.forward(&h);
        z.row(0).mapv(crate::neural::sigmoid)
    }

    /// Time-major slices `(FEATURES, batch)` from row-major windows.
    fn steps_of(&self, windows: &[&Array2<f64>]) -> Vec<Array2<f64>> {
        let window = self.config.window;
        (0..window)
            .map(|t| Array2::from_shape_fn((FEATURES, windows.len()), |(f, b)| windows[b][(t, f)]))
            .collect()
    }

    /// Predicted forward valuation for one window. Deterministic given the
    /// parameters.
    pub fn predict(&self, window: &FeatureWindow) -> Result<Valuation, PredictorError> {
        if window.len() != self.config.window {
            return Err(PredictorError::InvalidFeature(format!(
                "window length {} does not match configured {}",
                window.len(),
                self.config.window
            )));
        }
        let out = self.predict_batch(&[&window.data]);
        Valuation::new(out[0]).map_err(|e| PredictorError::InvalidFeature(e.to_string()))
    }

    /// Train from `start_epoch` to the configured epoch count, one Adam step
    /// per minibatch. Epoch order is derived from `base_seed`, so resuming
    /// at an epoch boundary reproduces the uninterrupted trajectory.
    pub fn train_supervised(
        &mut self,
        data: &SupervisedDataset,
        adam: &mut Adam,
        base_seed: u64,
        start_epoch: usize,
    ) -> Vec<EpochStats> {
        self.train_supervised_until(data, adam, base_seed, start_epoch, self.config.epochs)
    }

    /// Train over `start_epoch..end_epoch` only; used for interrupted runs.
    pub fn train_supervised_until(
        &mut self,
        data: &SupervisedDataset,
        adam: &mut Adam,
        base_seed: u64,
        start_epoch: usize,
        end_epoch: usize,
    ) -> Vec<EpochStats> {
        let mean_load = data.mean_expected_load();
        let mut stats = Vec::new();
        for epoch in start_epoch..end_epoch.min(self.config.epochs) {
            let mut order: Vec<usize> = (0..data.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(
                base_seed ^ (epoch as u64).wrapping_mul(0x9e3779b97f4a7c15),
            );
            order.shuffle(&mut rng);

            let mut abs_err_sum = 0.0;
            for chunk in order.chunks(self.config.batch) {
                abs_err_sum += self.train_minibatch(data, chunk, adam);
            }
            let mean_abs_err = abs_err_sum / data.len() as f64;
            stats.push(EpochStats {
                epoch,
                mean_abs_err,
                mean_expected_load: mean_load,
                loss_eq4: mean_abs_err + mean_load,
            });
        }
        stats
    }

    /// One minibatch update; returns the summed absolute error.
    fn train_minibatch(&mut self, data: &SupervisedDataset, idx: &[usize], adam: &mut Adam) -> f64 {
        let windows: Vec<&Array2<f64>> = idx.iter().map(|&i| &data.windows[i]).collect();
        let steps = self.steps_of(&windows);
        let (h, caches) = self.lstm.forward_seq(&steps);
        let (z, head_cache) = self.head.forward(&h);
        let batch = idx.len() as f64;

        let mut abs_err_sum = 0.0;
        let mut dz = Array2::zeros(z.dim());
        for (col, &i) in idx.iter().enumerate() {
            let pred = crate::neural::sigmoid(z[(0, col)]);
            let err = pred - data.targets[i];
            abs_err_sum += err.abs();
            // Subgradient of |err| is 0 at equality; logistic derivative
            // chains the head output into (0, 1).
            let sign = if err == 0.0 { 0.0 } else { err.signum() };
            dz[(0, col)] = sign * pred * (1.0 - pred) / batch;
        }

        let (head_grads, dh) = self.head.backward(&head_cache, &dz);
        let (lstm_grads, _) = self.lstm.backward_seq(&caches, &dh);

        let mut grads = Vec::with_capacity(self.num_params());
        lstm_grads.flatten_into(&mut grads);
        head_grads.flatten_into(&mut grads);

        let mut params = self.flatten_params();
        adam.step(&mut params, &grads);
        self.load_params(&params);
        abs_err_sum
    }

    /// Serialize parameters, optimizer state, and progress.
    pub fn to_checkpoint(
        &self,
        adam: Option<&Adam>,
        next_epoch: usize,
        base_seed: u64,
    ) -> Checkpoint {
        let mut ckpt = Checkpoint::new("predictor");
        let flat = self.flatten_params();
        for ((name, shape), offset) in self.param_blocks().iter().zip(self.block_offsets()) {
            let len: usize = shape.iter().product();
            ckpt.push_block(name, shape.clone(), flat[offset..offset + len].to_vec());
        }
        if let Some(adam) = adam {
            let (step, m, v) = adam.state();
            ckpt.push_block("adam.m", vec![m.len()], m.to_vec());
            ckpt.push_block("adam.v", vec![v.len()], v.to_vec());
            ckpt.set_meta_u64("adam_step", step);
        }
        ckpt.set_meta_u64("next_epoch", next_epoch as u64);
        ckpt.set_meta_u64("base_seed", base_seed);
        ckpt.set_meta_u64("window", self.config.window as u64);
        ckpt.set_meta_u64("hidden", self.config.hidden as u64);
        ckpt.set_meta_u64("horizon", self.config.horizon as u64);
        ckpt.set_meta_u64("epochs", self.config.epochs as u64);
        ckpt.set_meta_u64("batch", self.config.batch as u64);
        ckpt
    }

    fn block_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::new();
        let mut acc = 0;
        for (_, shape) in self.param_blocks() {
            offsets.push(acc);
            acc += shape.iter().product::<usize>();
        }
        offsets
    }

    /// Rebuild a predictor (and optionally its optimizer and progress) from
    /// a checkpoint.
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
    ) -> Result<(Self, Option<Adam>, usize, u64), PredictorError> {
        ckpt.expect_kind("predictor")?;
        let config = PredictorConfig {
            window: ckpt.meta_u64("window")? as usize,
            hidden: ckpt.meta_u64("hidden")? as usize,
            horizon: ckpt.meta_u64("horizon")? as usize,
            epochs: ckpt.meta_u64("epochs")? as usize,
            batch: ckpt.meta_u64("batch")? as usize,
        };
        let mut predictor = Predictor::new(config, 0)?;
        let mut flat = Vec::with_capacity(predictor.num_params());
        for (name, shape) in predictor.param_blocks() {
            let block = ckpt.block(&name)?;
            if block.shape != shape {
                return Err(PredictorError::Checkpoint(CheckpointError::Format(
                    format!(
                        "block `{name}` has shape {:?}, expected {shape:?}",
                        block.shape
                    ),
                )));
            }
            flat.extend_from_slice(&block.data);
        }
        predictor.load_params(&flat);

        let adam = match (
            ckpt.block("adam.m"),
            ckpt.block("adam.v"),
            ckpt.meta_u64("adam_step"),
        ) {
            (Ok(m), Ok(v), Ok(step)) => {
                let mut adam = Adam::new(predictor.num_params());
                adam.restore(step, m.data.clone(), v.data.clone());
                Some(adam)
            }
            _ => None,
        };
        let next_epoch = ckpt.meta_u64("next_epoch")? as usize;
        let base_seed = ckpt.meta_u64("base_seed")?;
        Ok((predictor, adam, next_epoch, base_seed))
    }
}

impl FlatParams for Predictor {
    fn param_blocks(&self) -> Vec<(String, Vec<usize>)> {
        let mut blocks = Vec::new();
        for (name, shape) in self.lstm.param_blocks() {
            blocks.push((format!("lstm.{name}"), shape));
        }
        for (name, shape) in self.head.param_blocks() {
            blocks.push((format!("head.{name}"), shape));
        }
        blocks
    }

    fn flatten_params(&self) -> Vec<f64> {
        let mut flat = self.lstm.flatten_params();
        flat.extend(self.head.flatten_params());
        flat
    }

    fn load_params(&mut self, flat: &[f64]) {
        let n_lstm = self.lstm.num_params();
        self.lstm.load_params(&flat[..n_lstm]);
        self.head.load_params(&flat[n_lstm..]);
    }
}
