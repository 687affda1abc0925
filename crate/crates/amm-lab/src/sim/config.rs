//! Run configuration: a single versioned TOML file with nested sections.
//! Unknown keys are errors; a typo in an experiment config must not pass
//! silently.

use super::SimError;
use crate::agent::{
    ActionEpsilonPolicy, AgentTrainConfig, DqnConfig, EventConfig, ExplorationSchedule,
    MarketEnvConfig, QNetConfig, RewardConfig,
};
use crate::liquidity::LpPosition;
use crate::loss::DensitySpec;
use crate::market::{load_csv, synth_gbm, synth_sine, PriceColumn, PriceSeries};
use crate::predictor::PredictorConfig;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub version: u32,
    #[serde(default)]
    pub run: RunSection,
    pub data: DataSection,
    #[serde(default)]
    pub pool: PoolSection,
    #[serde(default)]
    pub event: EventSection,
    #[serde(default)]
    pub reward: RewardSection,
    #[serde(default)]
    pub density: DensitySection,
    #[serde(default)]
    pub predictor: PredictorSection,
    #[serde(default)]
    pub agent: AgentSection,
    #[serde(default)]
    pub liquidity: LiquiditySection,
    #[serde(default)]
    pub rebalance: RebalanceSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    /// Mandatory for synthetic data sources.
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum DataSection {
    Csv {
        path: String,
        #[serde(default)]
        price_column: bool,
    },
    SynthGbm {
        n: usize,
        #[serde(default)]
        mu: f64,
        sigma: f64,
        p0: f64,
    },
    SynthSine {
        n: usize,
        period: f64,
        amplitude: f64,
        center: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoolSection {
    pub invariant: f64,
}

impl Default for PoolSection {
    fn default() -> Self {
        PoolSection { invariant: 100.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EventSection {
    pub beta_v: f64,
}

impl Default for EventSection {
    fn default() -> Self {
        EventSection {
            beta_v: EventConfig::default().beta_v,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardSection {
    pub beta_c: f64,
    pub gamma: f64,
}

impl Default for RewardSection {
    fn default() -> Self {
        let d = RewardConfig::default();
        RewardSection {
            beta_c: d.beta_c,
            gamma: d.gamma,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub enum DensitySection {
    Uniform,
    Gaussian { sigma: f64 },
    Gbm { mu: f64, sigma: f64, horizon: u32 },
}

impl Default for DensitySection {
    fn default() -> Self {
        DensitySection::Gbm {
            mu: 0.0,
            sigma: 0.01,
            horizon: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PredictorSection {
    pub window: usize,
    pub hidden: usize,
    pub horizon: usize,
    pub epochs: usize,
    pub batch: usize,
    /// Convergence gate for `train-predictor`: exit code 2 when the final
    /// mean absolute error exceeds it.
    pub target_abs_err: Option<f64>,
}

impl Default for PredictorSection {
    fn default() -> Self {
        let d = PredictorConfig::default();
        PredictorSection {
            window: d.window,
            hidden: d.hidden,
            horizon: d.horizon,
            epochs: d.epochs,
            batch: d.batch,
            target_abs_err: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentSection {
    pub episodes: usize,
    pub buffer_capacity: usize,
    pub batch: usize,
    pub target_sync: u64,
    pub explore_start: f64,
    pub explore_end: f64,
    pub explore_decay_steps: u64,
    pub mu_eps: f64,
    pub sigma_eps: f64,
    pub dueling: bool,
    pub conv_filters: usize,
    pub kernel: usize,
    pub stream_width: usize,
    pub max_events_per_episode: Option<usize>,
    /// Convergence gate for `train-agent`: exit code 2 when the mean reward
    /// over the final fifth of episodes falls below it.
    pub target_mean_reward: Option<f64>,
}

impl Default for AgentSection {
    fn default() -> Self {
        let dqn = DqnConfig::default();
        let qnet = QNetConfig::default();
        let policy = ActionEpsilonPolicy::default();
        AgentSection {
            episodes: 10,
            buffer_capacity: dqn.buffer_capacity,
            batch: dqn.batch,
            target_sync: dqn.target_sync,
            explore_start: dqn.explore.start,
            explore_end: dqn.explore.end,
            explore_decay_steps: dqn.explore.decay_steps,
            mu_eps: policy.mu_eps,
            sigma_eps: policy.sigma_eps,
            dueling: qnet.dueling,
            conv_filters: qnet.conv_filters,
            kernel: qnet.kernel,
            stream_width: qnet.stream_width,
            max_events_per_episode: None,
            target_mean_reward: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LiquiditySection {
    /// Intervals of advance notice for concentration shifts; 0 degrades the
    /// predictive regime into the look-back one.
    pub n_ahead: u64,
    /// Fraction of each simulated trade's input accruing to the incentive
    /// pool.
    pub fee_rate: f64,
    pub sigma_window: usize,
    pub sigma_fallback: f64,
    pub sigma_floor: f64,
    #[serde(default)]
    pub positions: Vec<PositionSection>,
}

impl Default for LiquiditySection {
    fn default() -> Self {
        LiquiditySection {
            n_ahead: 5,
            fee_rate: 0.003,
            sigma_window: 50,
            sigma_fallback: 0.05,
            sigma_floor: 1e-3,
            positions: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSection {
    pub owner: String,
    pub lower: f64,
    pub upper: f64,
    pub amount: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RebalanceSection {
    /// Pseudo-arbitrage curve shifting on or off.
    pub enabled: bool,
    /// Ledger fraction of the matching reserve that triggers a deposit.
    pub threshold: f64,
}

impl Default for RebalanceSection {
    fn default() -> Self {
        RebalanceSection {
            enabled: true,
            threshold: 0.01,
        }
    }
}

impl SimConfig {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
        let config: SimConfig =
            toml::from_str(&text).map_err(|e| SimError::Config(format!("{e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.version != CONFIG_VERSION {
            return Err(SimError::Config(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        if matches!(
            self.data,
            DataSection::SynthGbm { .. } | DataSection::SynthSine { .. }
        ) && self.run.seed.is_none()
        {
            return Err(SimError::Config(
                "run.seed is mandatory for synthetic data sources".to_string(),
            ));
        }
        if !self.pool.invariant.is_finite() || self.pool.invariant <= 0.0 {
            return Err(SimError::Config(format!(
                "pool.invariant must be positive, got {}",
                self.pool.invariant
            )));
        }
        if !self.event.beta_v.is_finite() || self.event.beta_v <= 0.0 {
            return Err(SimError::Config(format!(
                "event.beta_v must be positive, got {}",
                self.event.beta_v
            )));
        }
        let gamma_ok = self.reward.gamma > 0.0 && self.reward.gamma < 1.0;
        if !self.reward.beta_c.is_finite() || self.reward.beta_c <= 0.0 || !gamma_ok {
            return Err(SimError::Config(format!(
                "reward requires beta_c > 0 and gamma in (0, 1), got {} and {}",
                self.reward.beta_c, self.reward.gamma
            )));
        }
        let fee_ok = self.liquidity.fee_rate.is_finite() && self.liquidity.fee_rate >= 0.0;
        if !fee_ok || !self.rebalance.threshold.is_finite() || self.rebalance.threshold <= 0.0 {
            return Err(SimError::Config(
                "liquidity.fee_rate must be nonnegative and rebalance.threshold positive"
                    .to_string(),
            ));
        }
        for p in &self.liquidity.positions {
            LpPosition::new(&p.owner, p.lower, p.upper, p.amount)
                .map_err(|e| SimError::Config(e.to_string()))?;
        }
        self.predictor_config()
            .validate()
            .map_err(|e| SimError::Config(e.to_string()))?;
        Ok(())
    }

    /// Effective seed after a CLI override.
    pub fn seed(&self) -> u64 {
        self.run.seed.unwrap_or(0)
    }

    pub fn build_series(&self) -> Result<PriceSeries, SimError> {
        match &self.data {
            DataSection::Csv { path, price_column } => {
                let column = if *price_column {
                    PriceColumn::RelativePrice
                } else {
                    PriceColumn::Valuation
                };
                Ok(load_csv(Path::new(path), column)?)
            }
            DataSection::SynthGbm { n, mu, sigma, p0 } => {
                Ok(synth_gbm(self.seed(), *n, *mu, *sigma, *p0)?)
            }
            DataSection::SynthSine {
                n,
                period,
                amplitude,
                center,
            } => Ok(synth_sine(*n, *period, *amplitude, *center)?),
        }
    }

    pub fn density_spec(&self) -> DensitySpec {
        match self.density {
            DensitySection::Uniform => DensitySpec::Uniform,
            DensitySection::Gaussian { sigma } => DensitySpec::Gaussian { sigma },
            DensitySection::Gbm { mu, sigma, horizon } => DensitySpec::Gbm { mu, sigma, horizon },
        }
    }

    pub fn predictor_config(&self) -> PredictorConfig {
        PredictorConfig {
            window: self.predictor.window,
            hidden: self.predictor.hidden,
            horizon: self.predictor.horizon,
            epochs: self.predictor.epochs,
            batch: self.predictor.batch,
        }
    }

    pub fn event_config(&self) -> EventConfig {
        EventConfig {
            beta_v: self.event.beta_v,
        }
    }

    pub fn reward_config(&self) -> RewardConfig {
        RewardConfig {
            beta_c: self.reward.beta_c,
            gamma: self.reward.gamma,
        }
    }

    pub fn env_config(&self) -> MarketEnvConfig {
        MarketEnvConfig {
            event: self.event_config(),
            reward: self.reward_config(),
            density: self.density_spec(),
            pool_invariant: self.pool.invariant,
        }
    }

    pub fn agent_train_config(&self) -> AgentTrainConfig {
        AgentTrainConfig {
            episodes: self.agent.episodes,
            qnet: QNetConfig {
                window: self.predictor.window,
                channels: crate::agent::QNET_CHANNELS,
                conv_filters: self.agent.conv_filters,
                kernel: self.agent.kernel,
                stream_width: self.agent.stream_width,
                dueling: self.agent.dueling,
            },
            dqn: DqnConfig {
                buffer_capacity: self.agent.buffer_capacity,
                batch: self.agent.batch,
                target_sync: self.agent.target_sync,
                explore: ExplorationSchedule {
                    start: self.agent.explore_start,
                    end: self.agent.explore_end,
                    decay_steps: self.agent.explore_decay_steps,
                },
                gamma: self.reward.gamma,
                learning_rate: 1e-3,
            },
            policy: ActionEpsilonPolicy {
                mu_eps: self.agent.mu_eps,
                sigma_eps: self.agent.sigma_eps,
            },
            max_events_per_episode: self.agent.max_events_per_episode,
        }
    }

    /// Liquidity positions, defaulting to one full-range provider so the
    /// fee pool always has a recipient.
    pub fn positions(&self) -> Vec<LpPosition> {
        if self.liquidity.positions.is_empty() {
            return vec![LpPosition::new("lp-full-range", 0.0, 1.0, 1.0)
                .expect("full range position is valid")];
        }
        self.liquidity
            .positions
            .iter()
            .map(|p| LpPosition::new(&p.owner, p.lower, p.upper, p.amount).expect("validated"))
            .collect()
    }

    pub fn snapshot_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
