//! Desk-scale laboratory for a predictive constant-product market maker.
//!
//! The crate combines exact CPMM equilibrium pricing and loss accounting, a
//! pseudo-arbitrage curve-shift rebalancer, an LSTM valuation forecaster
//! feeding a dueling double Q-learning agent under an event-driven reward,
//! and a gaussian predictive liquidity-incentive allocator, all driven by
//! replayed or synthetic price-oracle series.
//!
//! Start with the runnable examples (`cargo run --example pool_basics`) or
//! the `amm-lab` binary (`amm-lab replay --config <path> --out <dir>`).

pub mod agent;
pub mod amm;
pub mod liquidity;
pub mod loss;
pub mod market;
pub mod neural;
pub mod predictor;
pub mod quad;
pub mod rebalance;
pub mod sim;

pub use amm::{BondingCurve, PoolState, Token, Valuation};
pub use loss::{LoadDirection, LossReport, ValuationDensity};
