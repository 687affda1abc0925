//! Run the dueling double DQN agent in the event-driven market environment
//! (small everything, a few seconds of CPU).
//!
//! ```bash
//! cargo run --example train_market_agent
//! ```

use amm_lab::agent::{
    train_agent, ActionEpsilonPolicy, AgentTrainConfig, DqnConfig, EventConfig, MarketEnvConfig,
    QNetConfig, RewardConfig, QNET_CHANNELS,
};
use amm_lab::loss::DensitySpec;
use amm_lab::market::synth_sine;
use amm_lab::neural::Adam;
use amm_lab::predictor::{build_dataset, Predictor, PredictorConfig};

fn main() {
    let series = synth_sine(300, 80.0, 0.1, 0.5).expect("range fits");

    // A quickly pretrained forecaster supplies the v'_p state feature.
    let pcfg = PredictorConfig {
        window: 12,
        hidden: 16,
        horizon: 3,
        epochs: 12,
        batch: 16,
    };
    let data = build_dataset(&series, &pcfg, |_| 0.0).expect("series long enough");
    let mut predictor = Predictor::new(pcfg, 5).expect("valid config");
    let mut adam = Adam::new(amm_lab::neural::FlatParams::num_params(&predictor));
    let stats = predictor.train_supervised(&data, &mut adam, 5, 0);
    println!(
        "pretrained forecaster to mean abs err {:.5}",
        stats.last().unwrap().mean_abs_err
    );

    let env_cfg = MarketEnvConfig {
        event: EventConfig { beta_v: 0.003 },
        reward: RewardConfig {
            beta_c: 0.02,
            gamma: 0.98,
        },
        density: DensitySpec::Gaussian { sigma: 0.05 },
        pool_invariant: 100.0,
    };
    let train_cfg = AgentTrainConfig {
        episodes: 3,
        qnet: QNetConfig {
            window: pcfg.window,
            channels: QNET_CHANNELS,
            conv_filters: 8,
            kernel: 3,
            stream_width: 8,
            dueling: true,
        },
        dqn: DqnConfig {
            batch: 16,
            buffer_capacity: 1000,
            ..DqnConfig::default()
        },
        policy: ActionEpsilonPolicy::default(),
        max_events_per_episode: Some(40),
    };

    let (trainer, rows) = train_agent(&series, &predictor, env_cfg, &train_cfg, 17).expect("runs");
    println!(
        "trained for {} events over 3 episodes ({} updates)",
        rows.len(),
        trainer.updates()
    );
    for episode in 0..3 {
        let episode_rows: Vec<_> = rows.iter().filter(|r| r.episode == episode).collect();
        let mean_reward = episode_rows
            .iter()
            .map(|r| f64::from(r.reward))
            .sum::<f64>()
            / episode_rows.len() as f64;
        let final_cum = episode_rows.last().map(|r| r.cum_reward).unwrap_or(0.0);
        println!(
            "episode {episode}: {} events, mean reward {mean_reward:+.3}, discounted return {final_cum:+.3}",
            episode_rows.len()
        );
    }
}
