//! Synthetic price-oracle series: seeded geometric Brownian motion and the
//! noiseless sine benchmark, with CSV round-tripping.
//!
//! ```bash
//! cargo run --example synthetic_series
//! ```

use amm_lab::market::{load_csv, normalize_price, synth_gbm, synth_sine, write_csv, PriceColumn};

fn main() {
    let v = normalize_price(4.0).expect("positive price");
    println!(
        "price 4.0 normalizes to v = {} (relative price {})",
        v.value(),
        v.relative_price()
    );

    let gbm = synth_gbm(42, 10, 0.0, 0.02, 1.0).expect("parameters");
    println!("gbm series ({}):", gbm.meta().source);
    for tick in gbm.ticks().iter().take(5) {
        println!(
            "  t = {}, v_obs = {:.6}, tau = {:+.3}",
            tick.t,
            tick.v_obs.value(),
            tick.tau
        );
    }

    let sine = synth_sine(8, 200.0, 0.1, 0.5).expect("range fits");
    println!("sine series ({}):", sine.meta().source);
    for tick in sine.ticks() {
        println!(
            "  t = {}, v_obs = {:.6}, tau = {:+.3}",
            tick.t,
            tick.v_obs.value(),
            tick.tau
        );
    }

    let dir = std::env::temp_dir().join("amm-lab-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join("series.csv");
    write_csv(&gbm, &path).expect("write");
    let loaded = load_csv(&path, PriceColumn::Valuation).expect("load");
    assert_eq!(loaded.len(), gbm.len());
    println!(
        "round-tripped {} ticks through {}",
        loaded.len(),
        path.display()
    );
}
