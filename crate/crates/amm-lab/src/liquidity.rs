//! Predictive liquidity incentives: a gaussian fee density centered on the
//! predicted forward valuation, scheduled to take effect some intervals
//! ahead, proportional fee allocation to provider ranges, and the
//! transparency log of prediction shifts.
//!
//! Unlike a binary in-range rule, the gaussian keeps every overlapping
//! position earning something; being far from the predicted concentration
//! range only shrinks the share.

use crate::quad::std_normal_mass;
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum LiquidityError {
    InvalidDistribution(String),
    InvalidPosition(String),
    NegativeFee(f64),
}

impl fmt::Display for LiquidityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LiquidityError::InvalidDistribution(msg) => {
                write!(f, "invalid fee distribution: {msg}")
            }
            LiquidityError::InvalidPosition(msg) => write!(f, "invalid position: {msg}"),
            LiquidityError::NegativeFee(v) => write!(f, "fee pool must be nonnegative, got {v}"),
        }
    }
}

impl std::error::Error for LiquidityError {}

/// Gaussian incentive-fee density over the valuation axis, centered on the
/// predicted forward valuation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeeDistribution {
    mu_phi: f64,
    sigma_phi: f64,
}

impl FeeDistribution {
    pub fn new(mu_phi: f64, sigma_phi: f64) -> Result<Self, LiquidityError> {
        if !mu_phi.is_finite() || !sigma_phi.is_finite() || sigma_phi <= 0.0 {
            return Err(LiquidityError::InvalidDistribution(format!(
                "mu {mu_phi}, sigma {sigma_phi}"
            )));
        }
        Ok(FeeDistribution { mu_phi, sigma_phi })
    }

    pub fn center(&self) -> f64 {
        self.mu_phi
    }

    pub fn width(&self) -> f64 {
        self.sigma_phi
    }

    /// Raw gaussian density, before truncation to the valuation interval.
    pub fn fee_density(&self, x: f64) -> f64 {
        let z = (x - self.mu_phi) / self.sigma_phi;
        (-0.5 * z * z).exp() / (self.sigma_phi * (2.0 * std::f64::consts::PI).sqrt())
    }

    fn truncation_mass(&self) -> f64 {
        std_normal_mass(
            (0.0 - self.mu_phi) / self.sigma_phi,
            (1.0 - self.mu_phi) / self.sigma_phi,
        )
    }

    /// Density renormalized over (0, 1); zero outside.
    pub fn truncated_pdf(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        self.fee_density(x) / self.truncation_mass()
    }

    /// Probability mass of the truncated density on `[lo, hi]`.
    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        let lo = lo.max(0.0);
        let hi = hi.min(1.0);
        if hi <= lo {
            return 0.0;
        }
        let raw = std_normal_mass(
            (lo - self.mu_phi) / self.sigma_phi,
            (hi - self.mu_phi) / self.sigma_phi,
        );
        (raw / self.truncation_mass()).clamp(0.0, 1.0)
    }
}

/// A provider's committed range and liquidity.
#[derive(Debug, Clone, PartialEq)]
pub struct LpPosition {
    pub owner: String,
    pub lower: f64,
    pub upper: f64,
    pub liquidity: f64,
}

impl LpPosition {
    pub fn new(
        owner: &str,
        lower: f64,
        upper: f64,
        liquidity: f64,
    ) -> Result<Self, LiquidityError> {
        if !(0.0..=1.0).contains(&lower) || !(0.0..=1.0).contains(&upper) || lower >= upper {
            return Err(LiquidityError::InvalidPosition(format!(
                "range [{lower}, {upper}] must satisfy 0 <= lower < upper <= 1"
            )));
        }
        if !liquidity.is_finite() || liquidity < 0.0 {
            return Err(LiquidityError::InvalidPosition(format!(
                "liquidity must be nonnegative, got {liquidity}"
            )));
        }
        Ok(LpPosition {
            owner: owner.to_string(),
            lower,
            upper,
            liquidity,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub owner: String,
    pub amount: f64,
}

/// Result of distributing one fee pool; when no position overlaps the
/// density, the pool is carried over instead of vanishing.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationOutcome {
    pub shares: Vec<Allocation>,
    pub carried_over: f64,
}

impl AllocationOutcome {
    pub fn distributed(&self) -> f64 {
        self.shares.iter().map(|s| s.amount).sum()
    }
}

/// Split `total_fee` across positions in proportion to
/// `liquidity x mass(range)` under the truncated density.
pub fn allocate_fees(
    positions: &[LpPosition],
    total_fee: f64,
    dist: &FeeDistribution,
) -> Result<AllocationOutcome, LiquidityError> {
    if !total_fee.is_finite() || total_fee < 0.0 {
        return Err(LiquidityError::NegativeFee(total_fee));
    }
    let weights: Vec<f64> = positions
        .iter()
        .map(|p| p.liquidity * dist.mass(p.lower, p.upper))
        .collect();
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 || total_fee == 0.0 {
        let carried = if total_weight <= 0.0 { total_fee } else { 0.0 };
        return Ok(AllocationOutcome {
            shares: positions
                .iter()
                .map(|p| Allocation {
                    owner: p.owner.clone(),
                    amount: 0.0,
                })
                .collect(),
            carried_over: carried,
        });
    }
    let shares = positions
        .iter()
        .zip(&weights)
        .map(|(p, w)| Allocation {
            owner: p.owner.clone(),
            amount: total_fee * w / total_weight,
        })
        .collect();
    Ok(AllocationOutcome {
        shares,
        carried_over: 0.0,
    })
}

/// Width policy: rolling standard deviation of recent valuations, with a
/// fallback when history is too short or degenerate, floored away from zero.
pub fn rolling_sigma(values: &[f64], window: usize, fallback: f64, floor: f64) -> f64 {
    let tail = if values.len() > window {
        &values[values.len() - window..]
    } else {
        values
    };
    if tail.len() < 2 {
        return fallback.max(floor);
    }
    let mean = tail.iter().sum::<f64>() / tail.len() as f64;
    let var = tail.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (tail.len() - 1) as f64;
    let std = var.sqrt();
    if std > 0.0 {
        std.max(floor)
    } else {
        fallback.max(floor)
    }
}

/// Append-only record of predicted centers and their realized outcomes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    /// Interval the prediction was submitted.
    pub t: u64,
    pub v_pred: f64,
    /// Interval the shifted concentration takes effect.
    pub effective_t: u64,
    /// Equilibrium valuation observed at the effective interval, once known.
    pub realized: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PredictionLog {
    records: Vec<PredictionRecord>,
}

impl PredictionLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn records(&self) -> &[PredictionRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    fn append(&mut self, record: PredictionRecord) {
        if let Some(last) = self.records.last() {
            assert!(
                record.t >= last.t,
                "prediction log must be appended in time order"
            );
        }
        self.records.push(record);
    }

    /// Fill in the realized valuation for records effective at `t`.
    pub fn record_realized(&mut self, effective_t: u64, realized: f64) {
        for record in &mut self.records {
            if record.effective_t == effective_t && record.realized.is_none() {
                record.realized = Some(realized);
            }
        }
    }

    /// CSV export: `t,v_pred,effective_t,realized_v` (blank until known).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,v_pred,effective_t,realized_v\n");
        for r in &self.records {
            let realized = r.realized.map(|v| v.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.t, r.v_pred, r.effective_t, realized
            ));
        }
        out
    }
}

/// Scheduler for concentration shifts: each prediction submitted at `t`
/// moves the fee-density center starting at `t + n`; conflicting schedules
/// for the same effective interval resolve to the latest submission.
#[derive(Debug, Clone, PartialEq)]
pub struct FeeSchedule {
    pending: BTreeMap<u64, f64>,
    current_center: f64,
}

impl FeeSchedule {
    pub fn new(initial_center: f64) -> Self {
        FeeSchedule {
            pending: BTreeMap::new(),
            current_center: initial_center,
        }
    }

    /// Submit a predicted center at interval `t_now`, effective `n` ahead,
    /// logging the shift.
    pub fn shift_concentration(
        &mut self,
        log: &mut PredictionLog,
        t_now: u64,
        v_pred: f64,
        n: u64,
    ) {
        let effective_t = t_now + n;
        // Later submission wins; both stay in the log.
        self.pending.insert(effective_t, v_pred);
        log.append(PredictionRecord {
            t: t_now,
            v_pred,
            effective_t,
            realized: None,
        });
        if n == 0 {
            self.advance_to(t_now);
        }
    }

    /// Consume schedules effective at or before `t`, in order.
    pub fn advance_to(&mut self, t: u64) {
        let due: Vec<u64> = self.pending.range(..=t).map(|(&k, _)| k).collect();
        for key in due {
            self.current_center = self.pending.remove(&key).expect("key just observed");
        }
    }

    pub fn effective_center(&self) -> f64 {
        self.current_center
    }

    pub fn distribution(&self, sigma: f64) -> Result<FeeDistribution, LiquidityError> {
        FeeDistribution::new(self.current_center, sigma)
    }
}
