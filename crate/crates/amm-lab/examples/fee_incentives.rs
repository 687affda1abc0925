//! Gaussian incentive-fee distribution: allocation across provider ranges,
//! n-interval-ahead concentration shifts, and the transparency log.
//!
//! ```bash
//! cargo run --example fee_incentives
//! ```

use amm_lab::liquidity::{
    allocate_fees, rolling_sigma, FeeDistribution, FeeSchedule, LpPosition, PredictionLog,
};

fn main() {
    let dist = FeeDistribution::new(0.55, 0.05).expect("valid parameters");
    println!(
        "density peak at the predicted center: {:.4}",
        dist.fee_density(0.55)
    );

    let positions = vec![
        LpPosition::new("near-the-money", 0.50, 0.60, 1.0).expect("range"),
        LpPosition::new("wide", 0.30, 0.80, 1.0).expect("range"),
        LpPosition::new("tail", 0.85, 0.95, 1.0).expect("range"),
    ];
    let outcome = allocate_fees(&positions, 100.0, &dist).expect("nonnegative fee");
    for share in &outcome.shares {
        println!("  {} earns {:.4}", share.owner, share.amount);
    }
    println!(
        "distributed {:.4} of 100 (carried over {:.4}); even the tail stays positive",
        outcome.distributed(),
        outcome.carried_over
    );

    // Predictions shift the concentration range in advance.
    let mut log = PredictionLog::new();
    let mut schedule = FeeSchedule::new(0.5);
    let n_ahead = 5;
    for t in 0..10u64 {
        let predicted = 0.5 + 0.01 * t as f64;
        schedule.shift_concentration(&mut log, t, predicted, n_ahead);
        schedule.advance_to(t);
        println!(
            "t = {t}: effective center {:.3}",
            schedule.effective_center()
        );
    }
    for t in 5..10u64 {
        log.record_realized(t, 0.5 + 0.011 * (t - 5) as f64);
    }
    println!("transparency log:\n{}", log.to_csv());

    let history: Vec<f64> = (0..60)
        .map(|i| 0.5 + 0.04 * ((i as f64) * 0.21).sin())
        .collect();
    println!(
        "rolling sigma policy suggests width {:.4}",
        rolling_sigma(&history, 50, 0.05, 1e-3)
    );
}
