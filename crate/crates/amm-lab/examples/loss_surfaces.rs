//! Divergence loss, slippage loss, their closed forms on the unit curve,
//! and the expected load against a future-valuation density.
//!
//! ```bash
//! cargo run --example loss_surfaces
//! ```

use amm_lab::loss::{
    divergence_loss, divergence_loss_closed, expected_load, linear_slippage, load, slippage_loss,
    slippage_loss_closed, LoadDirection, ValuationDensity,
};
use amm_lab::{BondingCurve, Valuation};

fn main() {
    let curve = BondingCurve::new(1.0).expect("unit curve");
    let v = |x: f64| Valuation::new(x).expect("open interval");

    let from = v(0.5);
    let to = v(0.2);
    let div = divergence_loss(&curve, from, to).expect("valid pair");
    let slip = slippage_loss(&curve, from, to).expect("valid pair");
    let composite = load(&curve, from, to, LoadDirection::X).expect("valid pair");
    println!("move v 0.5 -> 0.2: divergence {div:.4}, slippage {slip:.4}, load {composite:.4}");

    // The closed forms on f(x) = 1/x agree with the definitional losses.
    let x = 1.0;
    let delta = 1.0;
    println!(
        "closed forms at (x = {x}, delta = {delta}): divergence {:.4} (definitional {div:.4}), slippage {:.4} (definitional {slip:.4})",
        divergence_loss_closed(x, delta).expect("domain"),
        slippage_loss_closed(x, delta).expect("domain"),
    );

    let lin = linear_slippage(&curve, 1.0, 1.0).expect("domain");
    println!("linear-rate slippage for a unit trade at x = 1: {lin:.4}");

    // Expected load integrates the directional loads against a density of
    // future valuations.
    for (label, density) in [
        ("uniform", ValuationDensity::uniform()),
        (
            "gaussian(0.45, 0.1)",
            ValuationDensity::truncated_gaussian(0.45, 0.1).expect("params"),
        ),
        (
            "gbm 5 intervals",
            ValuationDensity::discretized_gbm(from, 0.0, 0.02, 5).expect("params"),
        ),
    ] {
        let e = expected_load(&curve, from, &density).expect("normalized density");
        println!("expected load from v = 0.5 under {label}: {e:.6e}");
    }
}
