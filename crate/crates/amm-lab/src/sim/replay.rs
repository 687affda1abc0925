//! End-to-end market replay: event detection, loss accounting with and
//! without the pseudo-arbitrage shift, fee accrual under a taker-flow model,
//! scheduled incentive centering, and the run report.
//!
//! Loss accounting is paired within a single pass: every event contributes
//! its unhedged divergence loss (what arbitrage would extract from an
//! unshifted pool) and the residual arbitrage profit left after the curve
//! shift (zero up to roundoff). The `rebalance.enabled` toggle selects which
//! mechanism actually drives the pool and which tally is the realized one.
//!
//! Fees model the taker flow that carries the pool between consecutive
//! equilibria on the primary curve: a configurable fraction of each such
//! trade's input value accrues to the incentive pool and is distributed at
//! the event tick under the effective fee density. The flow is identical in
//! both modes, so fee metrics never confound the divergence comparison.

use super::{SimConfig, SimError};
use crate::agent::{detect_event, EventOutcome};
use crate::amm::{equilibrium_valuation, BondingCurve, PoolState, Valuation};
use crate::liquidity::{allocate_fees, rolling_sigma, FeeSchedule, PredictionLog};
use crate::loss::{divergence_loss, expected_load, slippage_loss};
use crate::market::PriceSeries;
use crate::predictor::{make_window, Predictor};
use crate::rebalance::{
    accrue_shortfall, pseudo_arbitrage_shift, rebalance_deposit, InventoryLedger,
};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// How the fee-density center for a future interval is chosen.
pub enum CenterPolicy<'a> {
    /// Center on the current equilibrium valuation (the look-back rule).
    LookBack,
    /// Center on the forecaster's prediction for the effective interval.
    Predictive(&'a Predictor),
}

/// One line of `events.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRow {
    pub event: usize,
    pub t: u64,
    pub v_prev: f64,
    pub v_new: f64,
    /// Divergence loss an unshifted pool pays to arbitrage on this move.
    pub div_loss: f64,
    /// Arbitrage profit still available after the pseudo-arbitrage shift.
    pub residual_div: f64,
    pub slip_loss: f64,
    pub expected_load: f64,
    pub fee_accrued: f64,
    pub fee_distributed: f64,
    pub fee_carried: f64,
    pub fee_center: f64,
    /// Pool capitalization weighted by the in-range liquidity fraction.
    pub active_cap: f64,
    pub shift_x: f64,
    pub shift_y: f64,
    pub rebalanced: bool,
    pub deposit_x: f64,
    pub deposit_y: f64,
}

pub const EVENTS_HEADER: &str = "event,t,v_prev,v_new,div_loss,residual_div,slip_loss,expected_load,fee_accrued,fee_distributed,fee_carried,fee_center,active_cap,shift_x,shift_y,rebalanced,deposit_x,deposit_y";

impl EventRow {
    fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.event,
            self.t,
            self.v_prev,
            self.v_new,
            self.div_loss,
            self.residual_div,
            self.slip_loss,
            self.expected_load,
            self.fee_accrued,
            self.fee_distributed,
            self.fee_carried,
            self.fee_center,
            self.active_cap,
            self.shift_x,
            self.shift_y,
            self.rebalanced,
            self.deposit_x,
            self.deposit_y,
        )
    }

    fn from_csv(line: &str, lineno: usize) -> Result<Self, SimError> {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 18 {
            return Err(SimError::Report(format!(
                "events.csv line {lineno}: expected 18 fields, got {}",
                fields.len()
            )));
        }
        let parse = |idx: usize| -> Result<f64, SimError> {
            fields[idx]
                .parse()
                .map_err(|e| SimError::Report(format!("events.csv line {lineno} field {idx}: {e}")))
        };
        Ok(EventRow {
            event: fields[0]
                .parse()
                .map_err(|e| SimError::Report(format!("events.csv line {lineno}: {e}")))?,
            t: fields[1]
                .parse()
                .map_err(|e| SimError::Report(format!("events.csv line {lineno}: {e}")))?,
            v_prev: parse(2)?,
            v_new: parse(3)?,
            div_loss: parse(4)?,
            residual_div: parse(5)?,
            slip_loss: parse(6)?,
            expected_load: parse(7)?,
            fee_accrued: parse(8)?,
            fee_distributed: parse(9)?,
            fee_carried: parse(10)?,
            fee_center: parse(11)?,
            active_cap: parse(12)?,
            shift_x: parse(13)?,
            shift_y: parse(14)?,
            rebalanced: fields[15] == "true",
            deposit_x: parse(16)?,
            deposit_y: parse(17)?,
        })
    }
}

/// Aggregate metrics of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub pseudo_arbitrage: bool,
    pub events: usize,
    pub rebalances: usize,
    pub divergence_loss_without_shift: f64,
    pub divergence_loss_with_shift: f64,
    /// The tally matching the active mechanism.
    pub divergence_loss_realized: f64,
    pub slippage_loss_cumulative: f64,
    /// Mean `|fee-center - realized equilibrium valuation|` over matured
    /// scheduling records.
    pub mean_prediction_slippage: f64,
    pub mean_expected_load: f64,
    pub fees_accrued: f64,
    pub fees_distributed: f64,
    pub fees_carried_over: f64,
    /// Fees distributed per unit of in-range pool capitalization.
    pub capital_efficiency: f64,
}

impl RunReport {
    pub fn validate(&self) -> Result<(), SimError> {
        let metrics = [
            (
                "divergence_loss_without_shift",
                self.divergence_loss_without_shift,
            ),
            (
                "divergence_loss_with_shift",
                self.divergence_loss_with_shift,
            ),
            ("divergence_loss_realized", self.divergence_loss_realized),
            ("slippage_loss_cumulative", self.slippage_loss_cumulative),
            ("mean_prediction_slippage", self.mean_prediction_slippage),
            ("mean_expected_load", self.mean_expected_load),
            ("fees_accrued", self.fees_accrued),
            ("fees_distributed", self.fees_distributed),
            ("fees_carried_over", self.fees_carried_over),
            ("capital_efficiency", self.capital_efficiency),
        ];
        for (name, value) in metrics {
            if !value.is_finite() || value < 0.0 {
                return Err(SimError::Report(format!(
                    "metric {name} must be finite and nonnegative, got {value}"
                )));
            }
        }
        Ok(())
    }

    pub fn to_summary(&self, run_kind: &str, seed: u64) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "run: {run_kind}");
        let _ = writeln!(out, "seed: {seed}");
        let _ = writeln!(out, "pseudo_arbitrage: {}", self.pseudo_arbitrage);
        let _ = writeln!(out, "events: {}", self.events);
        let _ = writeln!(out, "rebalances: {}", self.rebalances);
        let _ = writeln!(
            out,
            "divergence_loss_without_shift: {}",
            self.divergence_loss_without_shift
        );
        let _ = writeln!(
            out,
            "divergence_loss_with_shift: {}",
            self.divergence_loss_with_shift
        );
        let _ = writeln!(
            out,
            "divergence_loss_realized: {}",
            self.divergence_loss_realized
        );
        let _ = writeln!(
            out,
            "slippage_loss_cumulative: {}",
            self.slippage_loss_cumulative
        );
        let _ = writeln!(
            out,
            "mean_prediction_slippage: {}",
            self.mean_prediction_slippage
        );
        let _ = writeln!(out, "mean_expected_load: {}", self.mean_expected_load);
        let _ = writeln!(out, "fees_accrued: {}", self.fees_accrued);
        let _ = writeln!(out, "fees_distributed: {}", self.fees_distributed);
        let _ = writeln!(out, "fees_carried_over: {}", self.fees_carried_over);
        let _ = writeln!(out, "capital_efficiency: {}", self.capital_efficiency);
        out
    }
}

/// Everything a replay produces.
pub struct ReplayArtifacts {
    pub report: RunReport,
    pub rows: Vec<EventRow>,
    pub log: PredictionLog,
}

/// Replay the configured series under the look-back centering rule (or a
/// predictive one when a forecaster is supplied), writing the output files
/// when `out` is given.
pub fn run_replay(
    config: &SimConfig,
    predictor: Option<&Predictor>,
    out: Option<&Path>,
) -> Result<ReplayArtifacts, SimError> {
    let series = config.build_series()?;
    let policy = match predictor {
        Some(p) => CenterPolicy::Predictive(p),
        None => CenterPolicy::LookBack,
    };
    let artifacts = replay_series(config, &series, policy, None)?;
    if let Some(out) = out {
        super::prepare_out_dir(out, config)?;
        write_replay_outputs(out, config, &artifacts)?;
    }
    Ok(artifacts)
}

pub fn write_replay_outputs(
    out: &Path,
    config: &SimConfig,
    artifacts: &ReplayArtifacts,
) -> Result<(), SimError> {
    let mut events = String::from(EVENTS_HEADER);
    events.push('\n');
    for row in &artifacts.rows {
        events.push_str(&row.to_csv());
        events.push('\n');
    }
    std::fs::write(out.join("events.csv"), events)?;
    std::fs::write(out.join("prediction_log.csv"), artifacts.log.to_csv())?;
    std::fs::write(
        out.join("summary.txt"),
        artifacts.report.to_summary("replay", config.seed()),
    )?;
    Ok(())
}

/// Core event loop shared by replay and evaluation. `start_override` aligns
/// the warmup position when two regimes must see the same event stream.
pub(super) fn replay_series(
    config: &SimConfig,
    series: &PriceSeries,
    policy: CenterPolicy<'_>,
    start_override: Option<usize>,
) -> Result<ReplayArtifacts, SimError> {
    let invariant = config.pool.invariant;
    let primary = BondingCurve::new(invariant)?;
    let event_cfg = config.event_config();
    let density_spec = config.density_spec();
    let positions = config.positions();
    let total_liquidity: f64 = positions.iter().map(|p| p.liquidity).sum();
    let n_ahead = config.liquidity.n_ahead;
    let enabled = config.rebalance.enabled;

    let start = start_override.unwrap_or(match &policy {
        CenterPolicy::Predictive(p) => p.config().window - 1,
        CenterPolicy::LookBack => 0,
    });
    if start + 1 >= series.len() {
        return Err(SimError::Config(format!(
            "series of {} ticks leaves no room after the warmup window",
            series.len()
        )));
    }
    let first_label = series.tick(0).t;
    let valuations: Vec<f64> = series.valuations().collect();
    let eq_at = |pos: usize| -> Result<Valuation, SimError> {
        Ok(equilibrium_valuation(&primary, series.tick(pos).v_obs)?)
    };

    let mut pool = PoolState::at_equilibrium(invariant, series.tick(start).v_obs)?;
    let mut curve = primary;
    let mut ledger = InventoryLedger::new();
    let mut log = PredictionLog::new();
    let mut prev_v = eq_at(start)?;
    let mut schedule = FeeSchedule::new(prev_v.value());
    let mut carried = 0.0;
    let mut owner_totals: BTreeMap<String, f64> = BTreeMap::new();

    let mut rows: Vec<EventRow> = Vec::new();
    let mut div_without = 0.0;
    let mut div_with = 0.0;
    let mut slip_cum = 0.0;
    let mut eload_sum = 0.0;
    let mut fees_accrued = 0.0;
    let mut fees_distributed = 0.0;
    let mut active_cap_sum = 0.0;
    let mut rebalances = 0usize;

    let mut pos = start;
    loop {
        // Choose the center that takes effect n_ahead intervals from now.
        let center = match &policy {
            CenterPolicy::LookBack => eq_at(pos)?.value(),
            CenterPolicy::Predictive(predictor) => {
                if n_ahead == 0 {
                    // Predicting the present interval is observing it; the
                    // ablation degenerates into the look-back rule.
                    eq_at(pos)?.value()
                } else {
                    let window = make_window(series, &[], pos, predictor.config().window)?;
                    predictor.predict(&window)?.value()
                }
            }
        };
        schedule.shift_concentration(&mut log, series.tick(pos).t, center, n_ahead);

        let k = match detect_event(series, pos, &event_cfg)? {
            EventOutcome::EndOfSeries => break,
            EventOutcome::Event { k } => k,
        };
        let next_pos = pos + k;
        let v_new = eq_at(next_pos)?;

        // Matured scheduling records get their realized valuations.
        for (p, &realized) in valuations
            .iter()
            .enumerate()
            .take(next_pos + 1)
            .skip(pos + 1)
        {
            log.record_realized(first_label + p as u64, realized);
        }

        let div = divergence_loss(&primary, prev_v, v_new)?;
        let slip = slippage_loss(&primary, prev_v, v_new)?;
        let density = density_spec.build(v_new)?;
        let eload = expected_load(&primary, v_new, &density)?;
        div_without += div;
        slip_cum += slip;
        eload_sum += eload;

        // Taker flow carrying the pool between equilibria; the input side
        // pays the incentive fee.
        let (a_prev, b_prev) = primary.equilibrium_state(prev_v)?;
        let (a_new, b_new) = primary.equilibrium_state(v_new)?;
        let input_value = if a_new < a_prev {
            v_new.complement() * (b_new - b_prev)
        } else {
            v_new.value() * (a_new - a_prev)
        };
        let fee = config.liquidity.fee_rate * input_value;
        fees_accrued += fee;

        let mut shift_x = 0.0;
        let mut shift_y = 0.0;
        let mut residual = 0.0;
        let mut rebalanced = false;
        let mut deposit_x = 0.0;
        let mut deposit_y = 0.0;
        if enabled {
            if prev_v.value() != v_new.value() {
                let shift = pseudo_arbitrage_shift(&curve, prev_v, v_new)?;
                shift_x = shift.shift_x;
                shift_y = shift.shift_y;
                let (ex, ey) = shift.new_equilibrium;
                residual =
                    (v_new.value() * (pool.x() - ex) + v_new.complement() * (pool.y() - ey)).abs();
                ledger = accrue_shortfall(&ledger, &shift);
                curve = shift.curve;
                if ledger.exceeds_fraction(&pool, config.rebalance.threshold) {
                    let outcome = rebalance_deposit(&pool, &curve, &ledger)?;
                    rebalanced = true;
                    rebalances += 1;
                    deposit_x = outcome.deposit_x;
                    deposit_y = outcome.deposit_y;
                    pool = outcome.pool;
                    curve = outcome.curve;
                    ledger = outcome.ledger;
                }
            }
        } else {
            // Arbitrage rebalances the unshifted pool to the new equilibrium.
            pool = PoolState::at_equilibrium(invariant, v_new)?;
        }
        div_with += residual;

        // Distribute this interval's accrued fees (plus any carry-over)
        // under the density effective at the event tick.
        schedule.advance_to(series.tick(next_pos).t);
        let sigma = rolling_sigma(
            &valuations[..=next_pos],
            config.liquidity.sigma_window,
            config.liquidity.sigma_fallback,
            config.liquidity.sigma_floor,
        );
        let dist = schedule.distribution(sigma)?;
        let outcome = allocate_fees(&positions, fee + carried, &dist)?;
        carried = outcome.carried_over;
        let distributed = outcome.distributed();
        fees_distributed += distributed;
        for share in outcome.shares {
            *owner_totals.entry(share.owner).or_insert(0.0) += share.amount;
        }

        let cap = v_new.value() * pool.x() + v_new.complement() * pool.y();
        let active_liquidity: f64 = positions
            .iter()
            .filter(|p| p.lower <= v_new.value() && v_new.value() <= p.upper)
            .map(|p| p.liquidity)
            .sum();
        let active_fraction = if total_liquidity > 0.0 {
            active_liquidity / total_liquidity
        } else {
            1.0
        };
        let active_cap = cap * active_fraction;
        active_cap_sum += active_cap;

        rows.push(EventRow {
            event: rows.len() + 1,
            t: series.tick(next_pos).t,
            v_prev: prev_v.value(),
            v_new: v_new.value(),
            div_loss: div,
            residual_div: residual,
            slip_loss: slip,
            expected_load: eload,
            fee_accrued: fee,
            fee_distributed: distributed,
            fee_carried: carried,
            fee_center: schedule.effective_center(),
            active_cap,
            shift_x,
            shift_y,
            rebalanced,
            deposit_x,
            deposit_y,
        });

        prev_v = v_new;
        pos = next_pos;
    }

    let events = rows.len();
    let matured: Vec<(f64, f64)> = log
        .records()
        .iter()
        .filter_map(|r| r.realized.map(|realized| (r.v_pred, realized)))
        .collect();
    let mean_prediction_slippage = if matured.is_empty() {
        0.0
    } else {
        matured.iter().map(|(p, r)| (p - r).abs()).sum::<f64>() / matured.len() as f64
    };
    let mean_active_cap = if events > 0 {
        active_cap_sum / events as f64
    } else {
        0.0
    };
    let report = RunReport {
        pseudo_arbitrage: enabled,
        events,
        rebalances,
        divergence_loss_without_shift: div_without,
        divergence_loss_with_shift: div_with,
        divergence_loss_realized: if enabled { div_with } else { div_without },
        slippage_loss_cumulative: slip_cum,
        mean_prediction_slippage,
        mean_expected_load: if events > 0 {
            eload_sum / events as f64
        } else {
            0.0
        },
        fees_accrued,
        fees_distributed,
        fees_carried_over: carried,
        capital_efficiency: if mean_active_cap > 0.0 {
            fees_distributed / mean_active_cap
        } else {
            0.0
        },
    };
    report.validate()?;
    Ok(ReplayArtifacts { report, rows, log })
}

/// Recompute a [`RunReport`] from a run directory's `events.csv` and
/// `prediction_log.csv` by independent aggregation.
pub fn rederive_report(dir: &Path, pseudo_arbitrage: bool) -> Result<RunReport, SimError> {
    let events_text = std::fs::read_to_string(dir.join("events.csv"))?;
    let mut lines = events_text.lines();
    match lines.next() {
        Some(header) if header == EVENTS_HEADER => {}
        other => {
            return Err(SimError::Report(format!(
                "unexpected events.csv header: {:?}",
                other.unwrap_or_default()
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        rows.push(EventRow::from_csv(line, i + 2)?);
    }

    let log_text = std::fs::read_to_string(dir.join("prediction_log.csv"))?;
    let mut matured = Vec::new();
    for (i, line) in log_text.lines().enumerate() {
        if i == 0 || line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(SimError::Report(format!(
                "prediction_log.csv line {}: expected 4 fields",
                i + 1
            )));
        }
        if !fields[3].is_empty() {
            let pred: f64 = fields[1]
                .parse()
                .map_err(|e| SimError::Report(format!("prediction_log.csv line {}: {e}", i + 1)))?;
            let realized: f64 = fields[3]
                .parse()
                .map_err(|e| SimError::Report(format!("prediction_log.csv line {}: {e}", i + 1)))?;
            matured.push((pred, realized));
        }
    }

    let events = rows.len();
    let sum = |f: fn(&EventRow) -> f64| -> f64 { rows.iter().map(f).sum() };
    let div_without = sum(|r| r.div_loss);
    let div_with = sum(|r| r.residual_div);
    let fees_accrued = sum(|r| r.fee_accrued);
    let fees_distributed = sum(|r| r.fee_distributed);
    let mean_active_cap = if events > 0 {
        sum(|r| r.active_cap) / events as f64
    } else {
        0.0
    };
    let report = RunReport {
        pseudo_arbitrage,
        events,
        rebalances: rows.iter().filter(|r| r.rebalanced).count(),
        divergence_loss_without_shift: div_without,
        divergence_loss_with_shift: div_with,
        divergence_loss_realized: if pseudo_arbitrage {
            div_with
        } else {
            div_without
        },
        slippage_loss_cumulative: sum(|r| r.slip_loss),
        mean_prediction_slippage: if matured.is_empty() {
            0.0
        } else {
            matured.iter().map(|(p, r)| (p - r).abs()).sum::<f64>() / matured.len() as f64
        },
        mean_expected_load: if events > 0 {
            sum(|r| r.expected_load) / events as f64
        } else {
            0.0
        },
        fees_accrued,
        fees_distributed,
        fees_carried_over: rows.last().map(|r| r.fee_carried).unwrap_or(0.0),
        capital_efficiency: if mean_active_cap > 0.0 {
            fees_distributed / mean_active_cap
        } else {
            0.0
        },
    };
    report.validate()?;
    Ok(report)
}

/// Parse a summary file back into key-value pairs.
pub(super) fn parse_summary(text: &str) -> Result<BTreeMap<String, String>, SimError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(": ")
            .ok_or_else(|| SimError::Report(format!("malformed summary line `{line}`")))?;
        map.insert(key.to_string(), value.to_string());
    }
    Ok(map)
}
