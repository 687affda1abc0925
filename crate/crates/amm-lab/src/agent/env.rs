//! Event-driven environment: the agent watches price events, optionally
//! feeds the forecaster a gaussian input parameter, and is rewarded on the
//! realized single-step loss (prediction slippage plus expected load) at the
//! prediction horizon.

use super::replay::Transition;
use super::trainer::{DqnConfig, DqnTrainer};
use super::{
    detect_event, reward, step_loss, Action, ActionEpsilonPolicy, AgentError, EventConfig,
    EventOutcome, QNetConfig, RewardConfig,
};
use crate::amm::{equilibrium_valuation, BondingCurve, PoolState, Valuation};
use crate::loss::{expected_load, DensitySpec};
use crate::market::PriceSeries;
use crate::predictor::{make_window, Predictor};
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Q-network input channels: the three window features plus six broadcast
/// scalars (prediction, equilibrium valuation, expected load, last realized
/// loss, and normalized inventories).
pub const QNET_CHANNELS: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarketEnvConfig {
    pub event: EventConfig,
    pub reward: RewardConfig,
    pub density: DensitySpec,
    pub pool_invariant: f64,
}

impl Default for MarketEnvConfig {
    fn default() -> Self {
        MarketEnvConfig {
            event: EventConfig::default(),
            reward: RewardConfig::default(),
            density: DensitySpec::Gbm {
                mu: 0.0,
                sigma: 0.01,
                horizon: 5,
            },
            pool_invariant: 100.0,
        }
    }
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub transition: Transition,
    /// Tick label of the event at which the action was taken.
    pub event_t: u64,
    pub ell: f64,
    pub reward: i8,
    pub action: Action,
    pub done: bool,
}

/// The simulated market the agent interacts with between price events.
pub struct MarketEnv<'a> {
    series: &'a PriceSeries,
    predictor: &'a Predictor,
    cfg: MarketEnvConfig,
    curve: BondingCurve,
    pool: PoolState,
    initial_x: f64,
    initial_y: f64,
    eps_history: Vec<f64>,
    pos: usize,
    last_ell: f64,
    current_input: Array2<f64>,
    done: bool,
}

impl<'a> MarketEnv<'a> {
    pub fn new(
        series: &'a PriceSeries,
        predictor: &'a Predictor,
        cfg: MarketEnvConfig,
    ) -> Result<Self, AgentError> {
        let window = predictor.config().window;
        let horizon = predictor.config().horizon;
        if series.len() < window + horizon + 1 {
            return Err(AgentError::InsufficientData(format!(
                "series of {} ticks cannot host one window of {window} plus horizon {horizon}",
                series.len()
            )));
        }
        let curve = BondingCurve::new(cfg.pool_invariant)?;
        let start = window - 1;
        let pool = PoolState::at_equilibrium(cfg.pool_invariant, series.tick(start).v_obs)?;
        let mut env = MarketEnv {
            series,
            predictor,
            cfg,
            curve,
            pool,
            initial_x: pool.x(),
            initial_y: pool.y(),
            eps_history: vec![0.0; series.len()],
            pos: start,
            last_ell: 0.0,
            current_input: Array2::zeros((window, QNET_CHANNELS)),
            done: false,
        };
        env.current_input = env.state_input()?;
        Ok(env)
    }

    /// Rewind to the first full window; returns the initial state input.
    pub fn reset(&mut self) -> Result<Array2<f64>, AgentError> {
        self.pos = self.predictor.config().window - 1;
        self.eps_history.fill(0.0);
        self.last_ell = 0.0;
        self.done = false;
        self.pool =
            PoolState::at_equilibrium(self.cfg.pool_invariant, self.series.tick(self.pos).v_obs)?;
        self.current_input = self.state_input()?;
        Ok(self.current_input.clone())
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn current_input(&self) -> &Array2<f64> {
        &self.current_input
    }

    fn equilibrium_at(&self, pos: usize) -> Result<Valuation, AgentError> {
        Ok(equilibrium_valuation(
            &self.curve,
            self.series.tick(pos).v_obs,
        )?)
    }

    fn expected_load_at(&self, v: Valuation) -> Result<f64, AgentError> {
        let density = self.cfg.density.build(v)?;
        Ok(expected_load(&self.curve, v, &density)?)
    }

    fn prediction_at(&self, pos: usize) -> Result<Valuation, AgentError> {
        let window = make_window(
            self.series,
            &self.eps_history,
            pos,
            self.predictor.config().window,
        )?;
        Ok(self.predictor.predict(&window)?)
    }

    /// Assemble the q-net input at the current event.
    fn state_input(&self) -> Result<Array2<f64>, AgentError> {
        let window = self.predictor.config().window;
        let v_pred = self.prediction_at(self.pos)?;
        let v_eq = self.equilibrium_at(self.pos)?;
        let e_load = self.expected_load_at(v_eq)?;

        let start = self.pos + 1 - window;
        let input = Array2::from_shape_fn((window, QNET_CHANNELS), |(row, col)| {
            let p = start + row;
            match col {
                0 => self.series.tick(p).v_obs.value(),
                1 => self.series.tick(p).tau,
                2 => self.eps_history[p],
                3 => v_pred.value(),
                4 => v_eq.value(),
                5 => e_load,
                6 => self.last_ell,
                7 => self.pool.x() / self.initial_x,
                _ => self.pool.y() / self.initial_y,
            }
        });
        Ok(input)
    }

    /// Apply an action at the current event, realize the single-step loss at
    /// the prediction horizon, and advance to the next event.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, AgentError> {
        assert!(
            !self.done,
            "environment must be reset after a terminal step"
        );
        let acting_pos = self.pos;
        let state = self.current_input.clone();

        // Inserting the parameter changes the forecaster's input, hence the
        // prediction being graded.
        if let Action::InsertEpsilon(eps) = action {
            self.eps_history[acting_pos] = eps;
        }
        let v_pred = self.prediction_at(acting_pos)?;

        let target_pos = acting_pos + self.predictor.config().horizon;
        let v_eq_future = self.equilibrium_at(target_pos)?;
        let e_load_future = self.expected_load_at(v_eq_future)?;
        let ell = step_loss(v_eq_future, v_pred, e_load_future);
        let r = reward(ell, &self.cfg.reward);
        self.last_ell = ell;

        let horizon = self.predictor.config().horizon;
        let (next_input, done) = match detect_event(self.series, acting_pos, &self.cfg.event)? {
            EventOutcome::Event { k } => {
                let next_pos = acting_pos + k;
                self.pos = next_pos;
                let input = self.state_input()?;
                // Terminal once no further loss can be realized.
                (input, next_pos + horizon >= self.series.len())
            }
            EventOutcome::EndOfSeries => (state.clone(), true),
        };
        self.done = done;
        self.current_input = next_input.clone();

        Ok(StepOutcome {
            transition: Transition {
                state,
                action: action.index(),
                reward: f64::from(r),
                next_state: next_input,
                terminal: done,
            },
            event_t: self.series.tick(acting_pos).t,
            ell,
            reward: r,
            action,
            done,
        })
    }
}

/// Knobs for the training loop around the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentTrainConfig {
    pub episodes: usize,
    pub qnet: QNetConfig,
    pub dqn: DqnConfig,
    pub policy: ActionEpsilonPolicy,
    /// Truncate episodes after this many events.
    pub max_events_per_episode: Option<usize>,
}

impl Default for AgentTrainConfig {
    fn default() -> Self {
        AgentTrainConfig {
            episodes: 10,
            qnet: QNetConfig::default(),
            dqn: DqnConfig::default(),
            policy: ActionEpsilonPolicy::default(),
            max_events_per_episode: None,
        }
    }
}

/// One row of the per-episode metrics CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub episode: usize,
    pub event_t: u64,
    pub ell: f64,
    pub reward: i8,
    pub cum_reward: f64,
    pub action: Action,
}

/// Run the event loop for the configured number of episodes, one double-DQN
/// minibatch update per environment step. Returns the trainer and the
/// per-event metric rows.
pub fn train_agent(
    series: &PriceSeries,
    predictor: &Predictor,
    env_cfg: MarketEnvConfig,
    train_cfg: &AgentTrainConfig,
    seed: u64,
) -> Result<(DqnTrainer, Vec<EpisodeRow>), AgentError> {
    if train_cfg.qnet.window != predictor.config().window {
        return Err(AgentError::InsufficientData(format!(
            "q-net window {} must match predictor window {}",
            train_cfg.qnet.window,
            predictor.config().window
        )));
    }
    if train_cfg.qnet.channels != QNET_CHANNELS {
        return Err(AgentError::InsufficientData(format!(
            "q-net expects {QNET_CHANNELS} channels, configured {}",
            train_cfg.qnet.channels
        )));
    }
    let mut env = MarketEnv::new(series, predictor, env_cfg)?;
    let mut trainer = DqnTrainer::new(train_cfg.qnet, train_cfg.dqn, seed);
    let mut rows = Vec::new();

    for episode in 0..train_cfg.episodes {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ (episode as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
        let mut input = env.reset()?;
        let mut discount = 1.0;
        let mut cum_reward = 0.0;
        let mut events = 0usize;
        loop {
            let action = trainer.act(&input, &train_cfg.policy, &mut rng);
            let outcome = env.step(action)?;
            cum_reward += discount * f64::from(outcome.reward);
            discount *= env_cfg.reward.gamma;
            rows.push(EpisodeRow {
                episode,
                event_t: outcome.event_t,
                ell: outcome.ell,
                reward: outcome.reward,
                cum_reward,
                action: outcome.action,
            });
            input = outcome.transition.next_state.clone();
            trainer.observe(outcome.transition);
            trainer.update(&mut rng);
            events += 1;
            let truncated = train_cfg
                .max_events_per_episode
                .map(|cap| events >= cap)
                .unwrap_or(false);
            if outcome.done || truncated {
                break;
            }
        }
    }
    Ok((trainer, rows))
}
