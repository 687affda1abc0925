//! Event-driven market-making agent: price-based event detection, the
//! tolerance-band reward, a two-action space, and the dueling double deep
//! Q-network with its Bellman machinery.

mod env;
mod qnet;
mod replay;
mod tabular;
mod trainer;

pub use env::{
    train_agent, AgentTrainConfig, EpisodeRow, MarketEnv, MarketEnvConfig, StepOutcome,
    QNET_CHANNELS,
};
pub use qnet::{dueling_q, td_target, DuelingQNet, QNetConfig, QNetGrads};
pub use replay::{ReplayBuffer, Transition};
pub use tabular::{bellman_apply, q_learning, value_iteration, TabularMdp};
pub use trainer::{select_action, DqnConfig, DqnTrainer, UpdateStats};

use crate::amm::{AmmError, Valuation};
use crate::loss::LossError;
use crate::market::PriceSeries;
use crate::predictor::PredictorError;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::fmt;

#[derive(Debug)]
pub enum AgentError {
    OutOfRange {
        t0: usize,
        len: usize,
    },
    InsufficientData(String),
    NonStochasticRow {
        state: usize,
        action: usize,
        sum: f64,
    },
    Amm(AmmError),
    Loss(LossError),
    Predictor(PredictorError),
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::OutOfRange { t0, len } => {
                write!(f, "start position {t0} outside series of length {len}")
            }
            AgentError::InsufficientData(msg) => write!(f, "insufficient data: {msg}"),
            AgentError::NonStochasticRow { state, action, sum } => {
                write!(f, "transition row ({state}, {action}) sums to {sum}, not 1")
            }
            AgentError::Amm(e) => e.fmt(f),
            AgentError::Loss(e) => e.fmt(f),
            AgentError::Predictor(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for AgentError {}

impl From<AmmError> for AgentError {
    fn from(e: AmmError) -> Self {
        AgentError::Amm(e)
    }
}

impl From<LossError> for AgentError {
    fn from(e: LossError) -> Self {
        AgentError::Loss(e)
    }
}

impl From<PredictorError> for AgentError {
    fn from(e: PredictorError) -> Self {
        AgentError::Predictor(e)
    }
}

/// Relative half-width of the price-event band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventConfig {
    pub beta_v: f64,
}

impl Default for EventConfig {
    fn default() -> Self {
        // 0.01% band.
        EventConfig { beta_v: 1e-4 }
    }
}

/// Result of scanning for the next price event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventOutcome {
    /// First offset `k >= 1` whose valuation leaves the band.
    Event { k: usize },
    /// The series ended while the valuation stayed inside the band.
    EndOfSeries,
}

/// Scan forward from `t0` for the first valuation outside
/// `[v(t0) (1 - beta_v), v(t0) (1 + beta_v)]`.
pub fn detect_event(
    series: &PriceSeries,
    t0: usize,
    config: &EventConfig,
) -> Result<EventOutcome, AgentError> {
    if t0 >= series.len() {
        return Err(AgentError::OutOfRange {
            t0,
            len: series.len(),
        });
    }
    let v0 = series.tick(t0).v_obs.value();
    let lower = v0 * (1.0 - config.beta_v);
    let upper = v0 * (1.0 + config.beta_v);
    for k in 1..series.len() - t0 {
        let v = series.tick(t0 + k).v_obs.value();
        if !(lower <= v && v <= upper) {
            return Ok(EventOutcome::Event { k });
        }
    }
    Ok(EventOutcome::EndOfSeries)
}

/// Reward tolerance and discounting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardConfig {
    /// Threshold within which prediction slippage plus expected load is
    /// tolerated.
    pub beta_c: f64,
    pub gamma: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            beta_c: 0.005,
            gamma: 0.98,
        }
    }
}

/// Single-step loss: prediction slippage plus expected load.
pub fn step_loss(v_eq: Valuation, v_pred: Valuation, expected_load: f64) -> f64 {
    (v_eq.value() - v_pred.value()).abs() + expected_load
}

/// Exact float equality against `beta_c` is vacuous; ties use this band.
pub const REWARD_TIE_BAND: f64 = 1e-12;

/// Piecewise reward: -1 above the threshold, 0 on it, +1 below it.
pub fn reward(ell: f64, config: &RewardConfig) -> i8 {
    if (ell - config.beta_c).abs() <= REWARD_TIE_BAND {
        0
    } else if ell > config.beta_c {
        -1
    } else {
        1
    }
}

/// Discounted cumulative reward `sum_k gamma^k r_k`.
pub fn cumulative_reward(rewards: &[i8], gamma: f64) -> f64 {
    let mut acc = 0.0;
    let mut weight = 1.0;
    for &r in rewards {
        acc += weight * f64::from(r);
        weight *= gamma;
    }
    acc
}

/// The agent's two moves: perturb the forecaster or leave it alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Action {
    DoNothing,
    /// Carries the sampled gaussian input parameter in (-1, 1).
    InsertEpsilon(f64),
}

impl Action {
    pub fn index(&self) -> usize {
        match self {
            Action::DoNothing => 0,
            Action::InsertEpsilon(_) => 1,
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Action::DoNothing => None,
            Action::InsertEpsilon(e) => Some(*e),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Action::DoNothing => "do_nothing",
            Action::InsertEpsilon(_) => "insert_epsilon",
        }
    }
}

pub const NUM_ACTIONS: usize = 2;

/// Distribution of the gaussian input parameter, truncated to (-1, 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionEpsilonPolicy {
    pub mu_eps: f64,
    pub sigma_eps: f64,
}

impl Default for ActionEpsilonPolicy {
    fn default() -> Self {
        ActionEpsilonPolicy {
            mu_eps: 0.0,
            sigma_eps: 0.3,
        }
    }
}

impl ActionEpsilonPolicy {
    /// Rejection-sample the truncated gaussian.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let normal = Normal::new(self.mu_eps, self.sigma_eps).expect("finite epsilon parameters");
        loop {
            let eps = normal.sample(rng);
            if -1.0 < eps && eps < 1.0 {
                return eps;
            }
        }
    }
}

/// Linear epsilon-greedy exploration decay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationSchedule {
    pub start: f64,
    pub end: f64,
    pub decay_steps: u64,
}

impl Default for ExplorationSchedule {
    fn default() -> Self {
        ExplorationSchedule {
            start: 1.0,
            end: 0.05,
            decay_steps: 5000,
        }
    }
}

impl ExplorationSchedule {
    pub fn rate(&self, step: u64) -> f64 {
        if step >= self.decay_steps {
            return self.end;
        }
        let frac = step as f64 / self.decay_steps as f64;
        self.start + (self.end - self.start) * frac
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::{PriceTick, SeriesMeta};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn series_of(values: &[f64]) -> PriceSeries {
        let ticks = values
            .iter()
            .enumerate()
            .map(|(t, &v)| PriceTick {
                t: t as u64,
                v_obs: Valuation::new(v).unwrap(),
                tau: 0.0,
            })
            .collect();
        PriceSeries::new(
            ticks,
            SeriesMeta {
                source: "test".into(),
                seed: None,
            },
        )
        .unwrap()
    }

    #[test]
    fn event_fires_on_first_band_exit() {
        // Scaled copy of the band-construction example: the first tick stays
        // inside the 0.01% band, the second leaves it.
        let series = series_of(&[0.5, 0.5 * 1.00005, 0.5 * 0.99985, 0.5]);
        let got = detect_event(&series, 0, &EventConfig::default()).unwrap();
        assert_eq!(got, EventOutcome::Event { k: 2 });
    }

    #[test]
    fn constant_series_reports_end_of_series() {
        let series = series_of(&[0.4; 10]);
        let got = detect_event(&series, 0, &EventConfig::default()).unwrap();
        assert_eq!(got, EventOutcome::EndOfSeries);
        assert!(detect_event(&series, 10, &EventConfig::default()).is_err());
    }

    #[test]
    fn large_jump_fires_immediately() {
        let series = series_of(&[0.5, 0.505]);
        let got = detect_event(&series, 0, &EventConfig::default()).unwrap();
        assert_eq!(got, EventOutcome::Event { k: 1 });
    }

    #[test]
    fn detector_never_fires_inside_band() {
        // Values engineered to hug the band without leaving it.
        let series = series_of(&[0.5, 0.500005, 0.499996, 0.500003, 0.49999999]);
        assert_eq!(
            detect_event(&series, 0, &EventConfig::default()).unwrap(),
            EventOutcome::EndOfSeries
        );
    }

    #[test]
    fn step_loss_examples() {
        let v = |x: f64| Valuation::new(x).unwrap();
        assert_eq!(step_loss(v(0.6), v(0.6), 0.0), 0.0);
        assert_relative_eq!(step_loss(v(0.6), v(0.5), 0.02), 0.12);
        assert_eq!(
            step_loss(v(0.6), v(0.5), 0.0),
            step_loss(v(0.5), v(0.6), 0.0)
        );
    }

    #[test]
    fn reward_piecewise_cases() {
        let cfg = RewardConfig {
            beta_c: 0.01,
            gamma: 0.98,
        };
        assert_eq!(reward(0.05, &cfg), -1);
        assert_eq!(reward(0.01, &cfg), 0);
        assert_eq!(reward(0.001, &cfg), 1);
        assert_eq!(reward(0.01 + 1e-13, &cfg), 0);
    }

    #[test]
    fn cumulative_reward_matches_geometric_series() {
        assert_relative_eq!(cumulative_reward(&[1, 1], 0.98), 1.98);
        assert_eq!(cumulative_reward(&[0; 12], 0.98), 0.0);
        let rewards = vec![1i8; 101];
        let got = cumulative_reward(&rewards, 0.98);
        let closed = (1.0 - 0.98f64.powi(101)) / (1.0 - 0.98);
        assert!((got - closed).abs() < 1e-12);
        // Bound |R| <= (1 - gamma^(T+1)) / (1 - gamma).
        assert!(got.abs() <= closed + 1e-12);
    }

    #[test]
    fn epsilon_samples_stay_in_open_interval() {
        let policy = ActionEpsilonPolicy {
            mu_eps: 0.0,
            sigma_eps: 0.8,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..100_000 {
            let eps = policy.sample(&mut rng);
            assert!(-1.0 < eps && eps < 1.0);
        }
    }

    #[test]
    fn exploration_schedule_is_linear_then_flat() {
        let sched = ExplorationSchedule {
            start: 1.0,
            end: 0.05,
            decay_steps: 100,
        };
        assert_eq!(sched.rate(0), 1.0);
        assert_relative_eq!(sched.rate(50), 0.525);
        assert_eq!(sched.rate(100), 0.05);
        assert_eq!(sched.rate(10_000), 0.05);
    }
}
