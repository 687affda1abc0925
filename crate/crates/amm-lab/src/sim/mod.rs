//! Orchestration: config loading, end-to-end replay/training/evaluation
//! pipelines, metric aggregation, and report emission. Runs are
//! deterministic under a fixed seed and write self-contained output
//! directories (config snapshot, per-event CSV, logs, checkpoints, summary).

mod config;
mod evaluate;
mod replay;
mod train;

pub use config::{
    AgentSection, DataSection, DensitySection, EventSection, LiquiditySection, PoolSection,
    PositionSection, PredictorSection, RebalanceSection, RewardSection, RunSection, SimConfig,
    CONFIG_VERSION,
};
pub use evaluate::{run_evaluate, EvaluationReport};
pub use replay::{rederive_report, run_replay, EventRow, ReplayArtifacts, RunReport};
pub use train::{run_train_agent, run_train_predictor, TrainOutcome};

use crate::agent::AgentError;
use crate::amm::AmmError;
use crate::liquidity::LiquidityError;
use crate::loss::LossError;
use crate::market::DataError;
use crate::neural::CheckpointError;
use crate::predictor::PredictorError;
use crate::rebalance::RebalanceError;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum SimError {
    Config(String),
    Io(std::io::Error),
    Data(DataError),
    Amm(AmmError),
    Loss(LossError),
    Rebalance(RebalanceError),
    Predictor(PredictorError),
    Agent(AgentError),
    Liquidity(LiquidityError),
    Checkpoint(CheckpointError),
    /// A configured convergence gate failed; maps to exit code 2.
    Convergence(String),
    Report(String),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "config error: {msg}"),
            SimError::Io(e) => write!(f, "io error: {e}"),
            SimError::Data(e) => write!(f, "data error: {e}"),
            SimError::Amm(e) => write!(f, "amm error: {e}"),
            SimError::Loss(e) => write!(f, "loss error: {e}"),
            SimError::Rebalance(e) => write!(f, "rebalance error: {e}"),
            SimError::Predictor(e) => write!(f, "predictor error: {e}"),
            SimError::Agent(e) => write!(f, "agent error: {e}"),
            SimError::Liquidity(e) => write!(f, "liquidity error: {e}"),
            SimError::Checkpoint(e) => write!(f, "checkpoint error: {e}"),
            SimError::Convergence(msg) => write!(f, "convergence check failed: {msg}"),
            SimError::Report(msg) => write!(f, "report error: {msg}"),
        }
    }
}

impl std::error::Error for SimError {}

macro_rules! impl_from {
    ($variant:ident, $ty:ty) => {
        impl From<$ty> for SimError {
            fn from(e: $ty) -> Self {
                SimError::$variant(e)
            }
        }
    };
}

impl_from!(Io, std::io::Error);
impl_from!(Data, DataError);
impl_from!(Amm, AmmError);
impl_from!(Loss, LossError);
impl_from!(Rebalance, RebalanceError);
impl_from!(Predictor, PredictorError);
impl_from!(Agent, AgentError);
impl_from!(Liquidity, LiquidityError);
impl_from!(Checkpoint, CheckpointError);

/// Create the run directory and drop the resolved config snapshot into it.
pub fn prepare_out_dir(out: &Path, config: &SimConfig) -> Result<PathBuf, SimError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("config.toml"), config.snapshot_toml())?;
    Ok(out.to_path_buf())
}

/// Parse a `summary.txt` into its key-value pairs.
pub fn parse_summary_file(
    text: &str,
) -> Result<std::collections::BTreeMap<String, String>, SimError> {
    replay::parse_summary(text)
}
