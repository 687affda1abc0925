//! Constant-product pool mechanics: swaps, the equilibrium maps between
//! valuations and curve points, and capitalization.
//!
//! ```bash
//! cargo run --example pool_basics
//! ```

use amm_lab::{BondingCurve, PoolState, Token, Valuation};

fn main() {
    let pool = PoolState::new(10.0, 10.0).expect("positive reserves");
    println!(
        "pool: x = {}, y = {}, c = {}",
        pool.x(),
        pool.y(),
        pool.invariant()
    );

    let (deposit, bought) = pool
        .swap_exact_out(Token::X, 5.0)
        .expect("reserve available");
    println!(
        "buying 5 X costs {deposit} Y -> pool ({}, {})",
        bought.x(),
        bought.y()
    );

    let (received, sold) = pool.swap_exact_in(Token::X, 10.0).expect("positive input");
    println!(
        "depositing 10 X returns {received} Y -> pool ({}, {})",
        sold.x(),
        sold.y()
    );

    let curve = BondingCurve::new(pool.invariant()).expect("positive invariant");
    for v in [0.2, 0.5, 0.8] {
        let v = Valuation::new(v).expect("open interval");
        let (x, y) = curve.equilibrium_state(v).expect("inside valuation window");
        let rate = curve.exchange_rate(x).expect("in domain");
        let cap = curve.equilibrium_capitalization(v).expect("in window");
        println!(
            "v = {:.1}: equilibrium ({x:.4}, {y:.4}), exchange rate {rate:.4}, cap {cap:.4}",
            v.value()
        );
        let back = curve.implied_valuation(x).expect("in domain");
        assert!((back.value() - v.value()).abs() < 1e-12);
    }

    // Every curve point is the equilibrium for some valuation.
    let x = 3.7;
    let v = curve.implied_valuation(x).expect("in domain");
    println!("x = {x} is the equilibrium point for v = {:.6}", v.value());
}
