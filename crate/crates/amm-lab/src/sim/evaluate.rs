//! Paired evaluation of the predictive fee-centering regime against the
//! look-back baseline on the same series and event stream.

use super::replay::{
    replay_series, write_replay_outputs, CenterPolicy, ReplayArtifacts, RunReport,
};
use super::{SimConfig, SimError};
use crate::neural::Checkpoint;
use crate::predictor::Predictor;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub predictive: RunReport,
    pub lookback: RunReport,
    /// Mean |fee-center - realized valuation| under each regime.
    pub predictive_center_error: f64,
    pub lookback_center_error: f64,
    /// Look-back error divided by predictive error (1 when both vanish).
    pub improvement_ratio: f64,
}

impl EvaluationReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "predictive_center_error: {}",
            self.predictive_center_error
        );
        let _ = writeln!(out, "lookback_center_error: {}", self.lookback_center_error);
        let _ = writeln!(out, "improvement_ratio: {}", self.improvement_ratio);
        out
    }
}

/// Replay the configured series twice from the same warmup position: once
/// centering fee incentives on the forecaster's n-ahead prediction, once on
/// the valuation observed at scheduling time.
pub fn run_evaluate(
    config: &SimConfig,
    predictor_ckpt: &Path,
    out: Option<&Path>,
) -> Result<EvaluationReport, SimError> {
    let ckpt = Checkpoint::load(predictor_ckpt)?;
    let (predictor, _, _, _) = Predictor::from_checkpoint(&ckpt)?;
    let series = config.build_series()?;

    // Both regimes warm up past the forecaster's window so they see the
    // identical event stream.
    let warmup = predictor.config().window - 1;
    let predictive = replay_series(
        config,
        &series,
        CenterPolicy::Predictive(&predictor),
        Some(warmup),
    )?;
    let lookback = replay_series(config, &series, CenterPolicy::LookBack, Some(warmup))?;

    let report = EvaluationReport {
        predictive_center_error: predictive.report.mean_prediction_slippage,
        lookback_center_error: lookback.report.mean_prediction_slippage,
        improvement_ratio: ratio(
            lookback.report.mean_prediction_slippage,
            predictive.report.mean_prediction_slippage,
        ),
        predictive: predictive.report.clone(),
        lookback: lookback.report.clone(),
    };

    if let Some(out) = out {
        super::prepare_out_dir(out, config)?;
        write_regime(out, config, "predictive", &predictive)?;
        write_regime(out, config, "lookback", &lookback)?;
        std::fs::write(out.join("evaluation.txt"), report.to_text())?;
    }
    Ok(report)
}

fn ratio(numerator: f64, denominator: f64) -> f64 {
    if denominator == 0.0 {
        if numerator == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        numerator / denominator
    }
}

fn write_regime(
    out: &Path,
    config: &SimConfig,
    name: &str,
    artifacts: &ReplayArtifacts,
) -> Result<(), SimError> {
    let dir = out.join(name);
    std::fs::create_dir_all(&dir)?;
    write_replay_outputs(&dir, config, artifacts)?;
    Ok(())
}
