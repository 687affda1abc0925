//! Property tests over the core invariants.

use amm_lab::agent::{cumulative_reward, reward, RewardConfig};
use amm_lab::liquidity::{allocate_fees, FeeDistribution, LpPosition};
use amm_lab::loss::{divergence_loss, load, slippage_loss, LoadDirection};
use amm_lab::market::normalize_price;
use amm_lab::{BondingCurve, PoolState, Token, Valuation};
use proptest::prelude::*;

proptest! {
    #[test]
    fn swaps_preserve_the_invariant(
        x in 1e-3f64..1e6,
        y in 1e-3f64..1e6,
        fraction in 1e-6f64..0.9,
        input_side in prop::bool::ANY,
        exact_out in prop::bool::ANY,
    ) {
        let pool = PoolState::new(x, y).unwrap();
        let side = if input_side { Token::X } else { Token::Y };
        let amount = fraction * pool.reserve(side);
        let (paid, next) = if exact_out {
            pool.swap_exact_out(side, amount).unwrap()
        } else {
            pool.swap_exact_in(side, amount).unwrap()
        };
        prop_assert!(paid > 0.0);
        prop_assert!(next.invariant_drift() < 1e-12);
    }

    #[test]
    fn equilibrium_maps_invert_each_other(c in 1e-3f64..1e4, v in 0.001f64..0.999) {
        let curve = BondingCurve::new(c).unwrap();
        let val = Valuation::new(v).unwrap();
        let x = curve.equilibrium_x(val).unwrap();
        let back = curve.implied_valuation(x).unwrap();
        prop_assert!((back.value() - v).abs() < 1e-12);
    }

    #[test]
    fn price_normalization_round_trips(price in 1e-3f64..1e3) {
        // Beyond this range the 1 - v cancellation exceeds the identity's
        // 1e-12 budget in doubles.
        let v = normalize_price(price).unwrap();
        prop_assert!((v.relative_price() - price).abs() <= 1e-12 * price);
    }

    #[test]
    fn losses_are_nonnegative_and_vanish_on_identity(
        c in 0.1f64..100.0,
        a in 0.01f64..0.99,
        b in 0.01f64..0.99,
    ) {
        let curve = BondingCurve::new(c).unwrap();
        let from = Valuation::new(a).unwrap();
        let to = Valuation::new(b).unwrap();
        prop_assert!(divergence_loss(&curve, from, to).unwrap() >= 0.0);
        prop_assert!(slippage_loss(&curve, from, to).unwrap() >= 0.0);
        prop_assert!(load(&curve, from, to, LoadDirection::X).unwrap() >= 0.0);
        prop_assert!(load(&curve, from, to, LoadDirection::Y).unwrap() >= 0.0);
        prop_assert_eq!(divergence_loss(&curve, from, from).unwrap(), 0.0);
        prop_assert_eq!(slippage_loss(&curve, to, to).unwrap(), 0.0);
    }

    #[test]
    fn fee_allocation_conserves_and_pays_every_overlap(
        mu in 0.1f64..0.9,
        // Width floor keeps every range within ~20 sigma of the center,
        // where the tail mass is still representable in doubles.
        sigma in 0.05f64..0.4,
        total in 0.0f64..100.0,
        ranges in prop::collection::vec((0.0f64..0.98, 0.001f64..0.5, 0.01f64..10.0), 1..6),
    ) {
        let dist = FeeDistribution::new(mu, sigma).unwrap();
        let positions: Vec<LpPosition> = ranges
            .iter()
            .enumerate()
            .map(|(i, (lo, width, liquidity))| {
                LpPosition::new(&format!("lp{i}"), *lo, (lo + width).min(1.0), *liquidity).unwrap()
            })
            .collect();
        let outcome = allocate_fees(&positions, total, &dist).unwrap();
        prop_assert!((outcome.distributed() + outcome.carried_over - total).abs() < 1e-9);
        if total > 0.0 {
            // Gaussian support is full, so every positive-liquidity range earns.
            for share in &outcome.shares {
                prop_assert!(share.amount > 0.0, "{} earned nothing", share.owner);
            }
        }
    }

    #[test]
    fn reward_codomain_and_discount_bound(
        ell in 0.0f64..10.0,
        beta_c in 1e-6f64..1.0,
        rewards in prop::collection::vec(-1i8..=1, 0..200),
    ) {
        let config = RewardConfig { beta_c, gamma: 0.98 };
        let r = reward(ell, &config);
        prop_assert!(r == -1 || r == 0 || r == 1);
        let total = cumulative_reward(&rewards, config.gamma);
        let bound = (1.0 - config.gamma.powi(rewards.len() as i32 + 1)) / (1.0 - config.gamma);
        prop_assert!(total.abs() <= bound + 1e-9);
    }
}
