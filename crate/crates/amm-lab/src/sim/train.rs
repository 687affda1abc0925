//! Training pipelines: supervised forecaster pretraining and the
//! reinforcement-learning loop, with checkpoints, curve CSVs, and
//! convergence gates.

use super::{SimConfig, SimError};
use crate::agent::train_agent;
use crate::amm::BondingCurve;
use crate::loss::expected_load;
use crate::neural::{Adam, Checkpoint, FlatParams};
use crate::predictor::{build_dataset, Predictor};
use std::fmt::Write as _;
use std::path::Path;

/// Result of a training run; `converged` reflects the configured gate.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub converged: bool,
    pub message: String,
}

pub const PREDICTOR_CURVE_HEADER: &str = "epoch,mean_abs_err,mean_expected_load,loss_eq4";
pub const AGENT_EPISODES_HEADER: &str =
    "episode,event_k,ell,reward,cum_reward,action,epsilon_value";

/// Pretrain the forecaster on the configured series; optionally resume from
/// a checkpoint, in which case the stored seed and epoch counter keep the
/// trajectory identical to an uninterrupted run.
pub fn run_train_predictor(
    config: &SimConfig,
    out: &Path,
    resume: Option<&Path>,
) -> Result<TrainOutcome, SimError> {
    let series = config.build_series()?;
    let pcfg = config.predictor_config();
    let density_spec = config.density_spec();
    let curve = BondingCurve::new(config.pool.invariant)?;
    let data = build_dataset(&series, &pcfg, |v| {
        let density = density_spec.build(v).expect("validated density spec");
        expected_load(&curve, v, &density).expect("support valuations are in range")
    })?;

    let (mut predictor, mut adam, start_epoch, seed) = match resume {
        Some(path) => {
            let ckpt = Checkpoint::load(path)?;
            let (mut predictor, adam, next_epoch, seed) = Predictor::from_checkpoint(&ckpt)?;
            let stored = *predictor.config();
            if (stored.window, stored.hidden, stored.horizon)
                != (pcfg.window, pcfg.hidden, pcfg.horizon)
            {
                return Err(SimError::Config(format!(
                    "checkpoint architecture {stored:?} does not match configured {pcfg:?}"
                )));
            }
            // The schedule may extend past the interrupted run's target.
            predictor.set_training_schedule(pcfg.epochs, pcfg.batch);
            let adam = adam.unwrap_or_else(|| Adam::new(predictor.num_params()));
            (predictor, adam, next_epoch, seed)
        }
        None => {
            let seed = config.seed();
            let predictor = Predictor::new(pcfg, seed)?;
            let adam = Adam::new(predictor.num_params());
            (predictor, adam, 0, seed)
        }
    };

    let stats = predictor.train_supervised(&data, &mut adam, seed, start_epoch);

    super::prepare_out_dir(out, config)?;
    let mut curve_csv = String::from(PREDICTOR_CURVE_HEADER);
    curve_csv.push('\n');
    for s in &stats {
        let _ = writeln!(
            curve_csv,
            "{},{},{},{}",
            s.epoch, s.mean_abs_err, s.mean_expected_load, s.loss_eq4
        );
    }
    std::fs::write(out.join("predictor_curve.csv"), curve_csv)?;
    predictor
        .to_checkpoint(Some(&adam), pcfg.epochs, seed)
        .save(&out.join("predictor.json"))?;

    let final_err = stats.last().map(|s| s.mean_abs_err).unwrap_or(f64::NAN);
    match config.predictor.target_abs_err {
        Some(target) if final_err.is_nan() || final_err > target => Ok(TrainOutcome {
            converged: false,
            message: format!("final mean abs err {final_err} exceeds target {target}"),
        }),
        _ => Ok(TrainOutcome {
            converged: true,
            message: format!("final mean abs err {final_err} over {} epochs", stats.len()),
        }),
    }
}

/// Run the event-driven Q-learning loop against a pretrained forecaster.
pub fn run_train_agent(
    config: &SimConfig,
    out: &Path,
    predictor_ckpt: &Path,
) -> Result<TrainOutcome, SimError> {
    let series = config.build_series()?;
    let ckpt = Checkpoint::load(predictor_ckpt)?;
    let (predictor, _, _, _) = Predictor::from_checkpoint(&ckpt)?;

    let mut train_cfg = config.agent_train_config();
    train_cfg.qnet.window = predictor.config().window;
    let seed = config.seed();
    let (trainer, rows) = train_agent(&series, &predictor, config.env_config(), &train_cfg, seed)?;

    super::prepare_out_dir(out, config)?;
    let mut csv = String::from(AGENT_EPISODES_HEADER);
    csv.push('\n');
    for row in &rows {
        let eps = row
            .action
            .epsilon()
            .map(|e| e.to_string())
            .unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{}",
            row.episode,
            row.event_t,
            row.ell,
            row.reward,
            row.cum_reward,
            row.action.label(),
            eps
        );
    }
    std::fs::write(out.join("agent_episodes.csv"), csv)?;

    let mut qnet_ckpt = Checkpoint::new("qnet");
    let flat = trainer.online().flatten_params();
    let mut offset = 0;
    for (name, shape) in trainer.online().param_blocks() {
        let len: usize = shape.iter().product();
        qnet_ckpt.push_block(&name, shape, flat[offset..offset + len].to_vec());
        offset += len;
    }
    qnet_ckpt.set_meta_u64("episodes", train_cfg.episodes as u64);
    qnet_ckpt.set_meta_u64("base_seed", seed);
    qnet_ckpt.set_meta_u64("updates", trainer.updates());
    qnet_ckpt.save(&out.join("qnet.json"))?;

    // Mean reward over the final fifth of episodes, against the gate.
    let episodes = train_cfg.episodes.max(1);
    let tail_start = episodes - (episodes / 5).max(1);
    let tail: Vec<f64> = rows
        .iter()
        .filter(|r| r.episode >= tail_start)
        .map(|r| f64::from(r.reward))
        .collect();
    let tail_mean = if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    };
    match config.agent.target_mean_reward {
        Some(target) if tail_mean.is_nan() || tail_mean < target => Ok(TrainOutcome {
            converged: false,
            message: format!("tail mean reward {tail_mean} below target {target}"),
        }),
        _ => Ok(TrainOutcome {
            converged: true,
            message: format!("tail mean reward {tail_mean} over {} events", rows.len()),
        }),
    }
}
