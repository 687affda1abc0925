//! Train the LSTM forecaster on the noiseless sine benchmark and watch the
//! per-epoch loss curve (desk-scale sizes so it finishes in seconds).
//!
//! ```bash
//! cargo run --example train_forecaster
//! ```

use amm_lab::market::synth_sine;
use amm_lab::neural::{Adam, FlatParams};
use amm_lab::predictor::{build_dataset, make_window, Predictor, PredictorConfig};

fn main() {
    let series = synth_sine(400, 100.0, 0.1, 0.5).expect("range fits");
    let config = PredictorConfig {
        window: 20,
        hidden: 24,
        horizon: 5,
        epochs: 20,
        batch: 25,
    };
    let data = build_dataset(&series, &config, |_| 0.0).expect("series long enough");
    println!("dataset: {} sliding windows", data.len());

    let seed = 11;
    let mut predictor = Predictor::new(config, seed).expect("valid config");
    let mut adam = Adam::new(predictor.num_params());
    let stats = predictor.train_supervised(&data, &mut adam, seed, 0);
    for s in stats.iter().step_by(4).chain(stats.last()) {
        println!(
            "epoch {:>2}: mean |v' - v'_p| = {:.5}, loss = {:.5}",
            s.epoch, s.mean_abs_err, s.loss_eq4
        );
    }

    // Inspect a prediction against the realized future valuation.
    let t = 321;
    let window = make_window(&series, &[], t, config.window).expect("history available");
    let predicted = predictor.predict(&window).expect("valid window");
    let realized = series.tick(t + config.horizon).v_obs;
    println!(
        "at t = {t}: predicted v'_p = {:.5}, realized v' = {:.5}, slippage {:.5}",
        predicted.value(),
        realized.value(),
        (predicted.value() - realized.value()).abs()
    );
}
