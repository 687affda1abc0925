//! Pseudo-arbitrage curve shifts that neutralize arbitrage after a valuation
//! move, the inventory-shortfall ledger they leave behind, and the
//! liquidity-provider top-up that reverts the curve.
//!
//! When the valuation moves from `v` (equilibrium `(a, b)`) to `v_new`
//! (equilibrium `(a', b')`), translating the curve by `(a - a', b' - b)`
//! makes the pre-move holdings the new equilibrium: no arbitrage trade can
//! profit, so the divergence loss is never paid out. The pool is then
//! carrying `a - a'` surplus X and `b' - b` missing Y relative to the
//! primary curve; those imbalances accumulate in the ledger until liquidity
//! providers deposit them back and the offsets are cleared.

use crate::amm::{AmmError, BondingCurve, PoolState, Valuation};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum RebalanceError {
    Amm(AmmError),
    /// A shift between identical valuations is the identity.
    DegenerateShift(f64),
}

impl fmt::Display for RebalanceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RebalanceError::Amm(e) => e.fmt(f),
            RebalanceError::DegenerateShift(v) => {
                write!(
                    f,
                    "pseudo-arbitrage shift requires a valuation move, got v = v' = {v}"
                )
            }
        }
    }
}

impl std::error::Error for RebalanceError {}

impl From<AmmError> for RebalanceError {
    fn from(e: AmmError) -> Self {
        RebalanceError::Amm(e)
    }
}

/// Outcome of one pseudo-arbitrage shift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftResult {
    /// Horizontal offset `a - a'` added to the curve.
    pub shift_x: f64,
    /// Vertical offset `b' - b` subtracted from the curve.
    pub shift_y: f64,
    /// Equilibrium of the shifted curve at the new valuation; coincides with
    /// the pre-move holdings point.
    pub new_equilibrium: (f64, f64),
    /// The shifted curve.
    pub curve: BondingCurve,
}

/// Shift the bonding curve so that the pre-move equilibrium for `v` becomes
/// the equilibrium for `v_new`, neutralizing the arbitrage the move opened.
pub fn pseudo_arbitrage_shift(
    curve: &BondingCurve,
    v: Valuation,
    v_new: Valuation,
) -> Result<ShiftResult, RebalanceError> {
    if v.value() == v_new.value() {
        return Err(RebalanceError::DegenerateShift(v.value()));
    }
    let (a, b) = curve.equilibrium_state(v)?;
    let (a_new, b_new) = curve.equilibrium_state(v_new)?;
    let shift_x = a - a_new;
    let shift_y = b_new - b;
    let shifted = curve.shifted(shift_x, shift_y);
    let new_equilibrium = shifted.equilibrium_state(v_new)?;
    Ok(ShiftResult {
        shift_x,
        shift_y,
        new_equilibrium,
        curve: shifted,
    })
}

/// Cumulative imbalance the shifts have left in the pool: surplus of X and
/// missing Y relative to the primary curve. Either component may be
/// negative, denoting the mirrored imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InventoryLedger {
    pub surplus_x: f64,
    pub deficit_y: f64,
}

impl InventoryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.surplus_x == 0.0 && self.deficit_y == 0.0
    }

    /// Whether either imbalance exceeds `fraction` of the matching reserve.
    pub fn exceeds_fraction(&self, pool: &PoolState, fraction: f64) -> bool {
        self.surplus_x.abs() > fraction * pool.x() || self.deficit_y.abs() > fraction * pool.y()
    }
}

/// Accumulate one shift's imbalance into the ledger.
pub fn accrue_shortfall(ledger: &InventoryLedger, shift: &ShiftResult) -> InventoryLedger {
    InventoryLedger {
        surplus_x: ledger.surplus_x + shift.shift_x,
        deficit_y: ledger.deficit_y + shift.shift_y,
    }
}

/// Result of a liquidity-provider rebalancing deposit.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalanceOutcome {
    /// Token amounts liquidity providers move into the pool; a negative
    /// entry is surplus released back to them.
    pub deposit_x: f64,
    pub deposit_y: f64,
    /// Pool after the deposits, at the primary-curve equilibrium for the
    /// prevailing valuation.
    pub pool: PoolState,
    /// The primary curve, offsets cleared.
    pub curve: BondingCurve,
    pub ledger: InventoryLedger,
}

/// Deposit (and release) the token amounts that return the pool to the
/// primary CPMM curve at the prevailing valuation, clearing the ledger.
/// A zero ledger on an unshifted curve is a no-op.
pub fn rebalance_deposit(
    pool: &PoolState,
    curve: &BondingCurve,
    ledger: &InventoryLedger,
) -> Result<RebalanceOutcome, RebalanceError> {
    if ledger.is_zero() && !curve.is_shifted() {
        return Ok(RebalanceOutcome {
            deposit_x: 0.0,
            deposit_y: 0.0,
            pool: *pool,
            curve: *curve,
            ledger: InventoryLedger::new(),
        });
    }
    // The pool sits at the shifted curve's equilibrium for the prevailing
    // valuation, so the curve itself tells us what that valuation is.
    let prevailing = curve.implied_valuation(pool.x())?;
    let primary = curve.unshifted();
    let (tx, ty) = primary.equilibrium_state(prevailing)?;
    let target = PoolState::at_equilibrium(primary.invariant(), prevailing)?;
    Ok(RebalanceOutcome {
        deposit_x: tx - pool.x(),
        deposit_y: ty - pool.y(),
        pool: target,
        curve: primary,
        ledger: InventoryLedger::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: f64) -> Valuation {
        Valuation::new(x).unwrap()
    }

    fn unit_curve() -> BondingCurve {
        BondingCurve::new(1.0).unwrap()
    }

    #[test]
    fn worked_shift_example() {
        // v = 0.5 at (1, 1), v' = 0.8 at (0.5, 2): offsets (0.5, 1); the
        // shifted curve g(x) = 1/(x - 0.5) - 1 passes through (1, 1) with
        // slope -4 = 0.8 / (0.8 - 1).
        let shift = pseudo_arbitrage_shift(&unit_curve(), v(0.5), v(0.8)).unwrap();
        assert_relative_eq!(shift.shift_x, 0.5, max_relative = 1e-12);
        assert_relative_eq!(shift.shift_y, 1.0, max_relative = 1e-12);
        assert_relative_eq!(shift.new_equilibrium.0, 1.0, max_relative = 1e-12);
        assert_relative_eq!(shift.new_equilibrium.1, 1.0, max_relative = 1e-12);
        assert_relative_eq!(shift.curve.eval(1.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(shift.curve.slope(1.0).unwrap(), -4.0, max_relative = 1e-10);

        // Independent derivative oracle: central difference of g at 1.
        let h = 1e-6;
        let numeric =
            (shift.curve.eval(1.0 + h).unwrap() - shift.curve.eval(1.0 - h).unwrap()) / (2.0 * h);
        assert_relative_eq!(numeric, 0.8 / (0.8 - 1.0), max_relative = 1e-8);
    }

    #[test]
    fn degenerate_shift_rejected_and_continuous_at_identity() {
        let curve = unit_curve();
        assert!(matches!(
            pseudo_arbitrage_shift(&curve, v(0.5), v(0.5)),
            Err(RebalanceError::DegenerateShift(_))
        ));
        let shift = pseudo_arbitrage_shift(&curve, v(0.5), v(0.5 + 1e-9)).unwrap();
        assert!(shift.shift_x.abs() < 1e-6);
        assert!(shift.shift_y.abs() < 1e-6);
    }

    #[test]
    fn mirror_move_negates_shifts() {
        let curve = unit_curve();
        let fwd = pseudo_arbitrage_shift(&curve, v(0.5), v(0.8)).unwrap();
        let back = pseudo_arbitrage_shift(&curve, v(0.8), v(0.5)).unwrap();
        assert_relative_eq!(back.shift_x, -fwd.shift_x, max_relative = 1e-12);
        assert_relative_eq!(back.shift_y, -fwd.shift_y, max_relative = 1e-12);
    }

    #[test]
    fn no_arbitrage_after_shift() {
        // Against the shifted curve, moving from the pre-move holdings to
        // the new-valuation equilibrium extracts nothing.
        let curve = BondingCurve::new(4.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..1000 {
            let from = v(rng.gen_range(0.01..0.99));
            let to = v(rng.gen_range(0.01..0.99));
            if to.value() == from.value() {
                continue;
            }
            let (a, b) = curve.equilibrium_state(from).unwrap();
            let shift = pseudo_arbitrage_shift(&curve, from, to).unwrap();
            let (ex, ey) = shift.new_equilibrium;
            let profit = to.value() * (a - ex) + to.complement() * (b - ey);
            assert!(
                profit.abs() < 1e-10,
                "arbitrage profit {profit} after shift"
            );
            // Slope law at the new equilibrium.
            let slope = shift.curve.slope(ex).unwrap();
            let want = to.value() / (to.value() - 1.0);
            assert!((slope - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn shifted_curve_passes_through_pre_move_holdings() {
        let curve = BondingCurve::new(9.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..200 {
            let from = v(rng.gen_range(0.05..0.95));
            let to = v(rng.gen_range(0.05..0.95));
            if from.value() == to.value() {
                continue;
            }
            let (a, b) = curve.equilibrium_state(from).unwrap();
            let shift = pseudo_arbitrage_shift(&curve, from, to).unwrap();
            assert!((shift.curve.eval(a).unwrap() - b).abs() < 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn ledger_accumulates_and_cancels() {
        let curve = unit_curve();
        let ledger = InventoryLedger::new();
        let fwd = pseudo_arbitrage_shift(&curve, v(0.5), v(0.8)).unwrap();
        let ledger = accrue_shortfall(&ledger, &fwd);
        assert_relative_eq!(ledger.surplus_x, 0.5, max_relative = 1e-12);
        assert_relative_eq!(ledger.deficit_y, 1.0, max_relative = 1e-12);

        let back = pseudo_arbitrage_shift(&curve, v(0.8), v(0.5)).unwrap();
        let ledger = accrue_shortfall(&ledger, &back);
        assert!(ledger.surplus_x.abs() < 1e-12);
        assert!(ledger.deficit_y.abs() < 1e-12);
    }

    #[test]
    fn ledger_matches_independent_sums() {
        let curve = unit_curve();
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut ledger = InventoryLedger::new();
        let mut sum_x = 0.0;
        let mut sum_y = 0.0;
        let mut prev = v(0.5);
        for _ in 0..100 {
            let next = v(rng.gen_range(0.05..0.95));
            if next.value() == prev.value() {
                continue;
            }
            let shift = pseudo_arbitrage_shift(&curve, prev, next).unwrap();
            ledger = accrue_shortfall(&ledger, &shift);
            sum_x += shift.shift_x;
            sum_y += shift.shift_y;
            prev = next;
        }
        assert!((ledger.surplus_x - sum_x).abs() < 1e-12);
        assert!((ledger.deficit_y - sum_y).abs() < 1e-12);
    }

    #[test]
    fn rebalance_restores_primary_curve() {
        // After the worked shift, deposits bring the pool to PHI(0.8) on the
        // primary curve: release 0.5 X, deposit 1 Y.
        let curve = unit_curve();
        let pool = PoolState::at_equilibrium(1.0, v(0.5)).unwrap();
        let shift = pseudo_arbitrage_shift(&curve, v(0.5), v(0.8)).unwrap();
        let ledger = accrue_shortfall(&InventoryLedger::new(), &shift);

        let outcome = rebalance_deposit(&pool, &shift.curve, &ledger).unwrap();
        assert_relative_eq!(outcome.deposit_x, -0.5, max_relative = 1e-10);
        assert_relative_eq!(outcome.deposit_y, 1.0, max_relative = 1e-10);
        assert_relative_eq!(outcome.pool.x(), 0.5, max_relative = 1e-10);
        assert_relative_eq!(outcome.pool.y(), 2.0, max_relative = 1e-10);
        assert!(!outcome.curve.is_shifted());
        assert!(outcome.ledger.is_zero());
        assert!(outcome.pool.invariant_drift() < 1e-12);
    }

    #[test]
    fn zero_ledger_rebalance_is_noop() {
        let curve = unit_curve();
        let pool = PoolState::at_equilibrium(1.0, v(0.4)).unwrap();
        let outcome = rebalance_deposit(&pool, &curve, &InventoryLedger::new()).unwrap();
        assert_eq!(outcome.deposit_x, 0.0);
        assert_eq!(outcome.deposit_y, 0.0);
        assert_eq!(outcome.pool, pool);
    }

    #[test]
    fn alternating_shift_and_rebalance_replay() {
        let mut curve = unit_curve();
        let mut pool = PoolState::at_equilibrium(1.0, v(0.5)).unwrap();
        let mut ledger = InventoryLedger::new();
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let mut prev = v(0.5);
        for _ in 0..10 {
            let next = v(rng.gen_range(0.1..0.9));
            if next.value() == prev.value() {
                continue;
            }
            let shift = pseudo_arbitrage_shift(&curve, prev, next).unwrap();
            ledger = accrue_shortfall(&ledger, &shift);
            curve = shift.curve;
            // Ledger tracks the curve offsets exactly while unrebalanced.
            assert!((ledger.surplus_x - curve.shift_x()).abs() < 1e-12);
            assert!((ledger.deficit_y - curve.shift_y()).abs() < 1e-12);

            let outcome = rebalance_deposit(&pool, &curve, &ledger).unwrap();
            pool = outcome.pool;
            curve = outcome.curve;
            ledger = outcome.ledger;
            assert!(pool.invariant_drift() < 1e-12);
            let (ex, ey) = curve.equilibrium_state(next).unwrap();
            assert!((pool.x() - ex).abs() < 1e-9 * ex);
            assert!((pool.y() - ey).abs() < 1e-9 * ey);
            prev = next;
        }
    }

    #[test]
    fn threshold_trigger() {
        let pool = PoolState::new(100.0, 1.0).unwrap();
        let small = InventoryLedger {
            surplus_x: 0.5,
            deficit_y: 0.005,
        };
        assert!(!small.exceeds_fraction(&pool, 0.01));
        let big_x = InventoryLedger {
            surplus_x: 1.5,
            deficit_y: 0.0,
        };
        assert!(big_x.exceeds_fraction(&pool, 0.01));
        let big_y = InventoryLedger {
            surplus_x: 0.0,
            deficit_y: -0.02,
        };
        assert!(big_y.exceeds_fraction(&pool, 0.01));
    }
}
