//! Neutralizing arbitrage with a bonding-curve shift, accumulating the
//! inventory shortfall, and reverting to the primary curve with a
//! liquidity-provider deposit.
//!
//! ```bash
//! cargo run --example pseudo_arbitrage
//! ```

use amm_lab::loss::divergence_loss;
use amm_lab::rebalance::{
    accrue_shortfall, pseudo_arbitrage_shift, rebalance_deposit, InventoryLedger,
};
use amm_lab::{BondingCurve, PoolState, Valuation};

fn main() {
    let v = |x: f64| Valuation::new(x).expect("open interval");
    let mut curve = BondingCurve::new(1.0).expect("unit curve");
    let mut pool = PoolState::at_equilibrium(1.0, v(0.5)).expect("equilibrium pool");
    let mut ledger = InventoryLedger::new();

    println!("pool starts at ({}, {}) for v = 0.5", pool.x(), pool.y());

    // The valuation jumps to 0.8. Without intervention an arbitrageur
    // extracts the divergence loss.
    let unhedged = divergence_loss(&curve, v(0.5), v(0.8)).expect("valid pair");
    println!("unhedged divergence loss for 0.5 -> 0.8: {unhedged:.4}");

    // The pseudo-arbitrage shift makes the current holdings the new
    // equilibrium instead.
    let shift = pseudo_arbitrage_shift(&curve, v(0.5), v(0.8)).expect("distinct valuations");
    println!(
        "shift offsets ({:.4}, {:.4}); shifted curve passes through ({}, {}) with slope {:.4}",
        shift.shift_x,
        shift.shift_y,
        pool.x(),
        pool.y(),
        shift.curve.slope(pool.x()).expect("in domain"),
    );
    ledger = accrue_shortfall(&ledger, &shift);
    curve = shift.curve;
    println!(
        "ledger now carries surplus X {:.4}, missing Y {:.4}",
        ledger.surplus_x, ledger.deficit_y
    );

    // Liquidity providers top the pool back up; the curve offsets clear.
    let outcome = rebalance_deposit(&pool, &curve, &ledger).expect("rebalance");
    println!(
        "rebalance deposits: X {:.4} (negative = released), Y {:.4}",
        outcome.deposit_x, outcome.deposit_y
    );
    pool = outcome.pool;
    curve = outcome.curve;
    ledger = outcome.ledger;
    println!(
        "pool restored to ({}, {}) on the primary curve (shifted = {}), ledger zero = {}",
        pool.x(),
        pool.y(),
        curve.is_shifted(),
        ledger.is_zero(),
    );
}
