//! End-to-end checks of the `amm-lab` binary: subcommands, flags, exit
//! codes (0 success, 1 validation failure, 2 convergence failure), and the
//! report verification path.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_amm-lab"))
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn gbm_config(seed: u64) -> String {
    format!(
        r#"
version = 1

[run]
seed = {seed}

[data.synth-gbm]
n = 400
mu = 0.0
sigma = 0.01
p0 = 1.0
"#
    )
}

fn assert_code(output: &Output, code: i32) {
    assert_eq!(
        output.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

#[test]
fn replay_writes_artifacts_and_report_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, &gbm_config(9));
    let out = dir.path().join("out");

    let run = bin()
        .args(["replay", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_code(&run, 0);
    for file in [
        "config.toml",
        "events.csv",
        "prediction_log.csv",
        "summary.txt",
    ] {
        assert!(out.join(file).exists(), "missing {file}");
    }

    let report = bin().args(["report", "--run"]).arg(&out).output().unwrap();
    assert_code(&report, 0);
    assert!(String::from_utf8_lossy(&report.stdout).contains("verified against events.csv"));

    // Tampering with a metric must be caught.
    let events = std::fs::read_to_string(out.join("events.csv")).unwrap();
    let mut lines: Vec<String> = events.lines().map(String::from).collect();
    let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
    fields[4] = "0.25".to_string();
    lines[1] = fields.join(",");
    write(&out.join("events.csv"), &(lines.join("\n") + "\n"));
    let tampered = bin().args(["report", "--run"]).arg(&out).output().unwrap();
    assert_code(&tampered, 1);
}

#[test]
fn seed_override_changes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.toml");
    write(&config, &gbm_config(9));
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert_code(
        &bin()
            .args(["replay", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&a)
            .output()
            .unwrap(),
        0,
    );
    assert_code(
        &bin()
            .args(["replay", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&b)
            .output()
            .unwrap(),
        0,
    );
    assert_code(
        &bin()
            .args(["replay", "--config"])
            .arg(&config)
            .arg("--seed")
            .arg("10")
            .arg("--out")
            .arg(&c)
            .output()
            .unwrap(),
        0,
    );
    let read = |p: &Path| std::fs::read(p.join("events.csv")).unwrap();
    assert_eq!(read(&a), read(&b), "same seed must be byte-identical");
    assert_ne!(read(&a), read(&c), "seed override must change the run");
}

#[test]
fn invalid_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");

    write(
        &config,
        &format!("{}\n[pool]\ntypo_key = 1\n", gbm_config(1)),
    );
    assert_code(
        &bin()
            .args(["replay", "--config"])
            .arg(&config)
            .output()
            .unwrap(),
        1,
    );

    write(
        &config,
        r#"
version = 1

[data.synth-gbm]
n = 400
sigma = 0.01
p0 = 1.0
"#,
    );
    let missing_seed = bin()
        .args(["replay", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_code(&missing_seed, 1);
    assert!(String::from_utf8_lossy(&missing_seed.stderr).contains("seed"));

    let absent = bin()
        .args(["replay", "--config"])
        .arg(dir.path().join("nope.toml"))
        .output()
        .unwrap();
    assert_code(&absent, 1);
}

#[test]
fn unmet_convergence_gate_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("train.toml");
    write(
        &config,
        r#"
version = 1

[run]
seed = 3

[data.synth-sine]
n = 120
period = 60.0
amplitude = 0.1
center = 0.5

[predictor]
window = 10
hidden = 8
horizon = 2
epochs = 2
batch = 16
target_abs_err = 1e-9
"#,
    );
    let out = dir.path().join("out");
    let run = bin()
        .args(["train-predictor", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert_code(&run, 2);
    // Artifacts are still written for inspection.
    assert!(out.join("predictor.json").exists());
    assert!(out.join("predictor_curve.csv").exists());
}

#[test]
fn price_column_flag_switches_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("prices.csv");
    let mut text = String::from("t,price,tau\n");
    for t in 0..60 {
        let price = 1.0 + 0.001 * (t as f64) * if t % 2 == 0 { 1.0 } else { -1.0 };
        text.push_str(&format!("{t},{price},0.0\n"));
    }
    write(&csv, &text);

    let config = dir.path().join("run.toml");
    write(
        &config,
        &format!(
            r#"
version = 1

[data.csv]
path = {:?}
"#,
            csv.display().to_string()
        ),
    );

    // Without the flag the header does not match the valuation schema.
    let plain = bin()
        .args(["replay", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_code(&plain, 1);

    let flagged = bin()
        .args(["replay", "--config"])
        .arg(&config)
        .arg("--price-column")
        .output()
        .unwrap();
    assert_code(&flagged, 0);
}

#[test]
fn train_then_evaluate_flow() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bench.toml");
    write(
        &config,
        r#"
version = 1

[run]
seed = 5

[data.synth-sine]
n = 260
period = 80.0
amplitude = 0.1
center = 0.5

[predictor]
window = 12
hidden = 12
horizon = 3
epochs = 15
batch = 16

[liquidity]
n_ahead = 3
"#,
    );
    let train_out = dir.path().join("train");
    let run = bin()
        .args(["train-predictor", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&train_out)
        .output()
        .unwrap();
    assert_code(&run, 0);

    let eval_out = dir.path().join("eval");
    let eval = bin()
        .args(["evaluate", "--config"])
        .arg(&config)
        .arg("--checkpoint")
        .arg(train_out.join("predictor.json"))
        .arg("--out")
        .arg(&eval_out)
        .output()
        .unwrap();
    assert_code(&eval, 0);
    let text = String::from_utf8_lossy(&eval.stdout).to_string();
    assert!(text.contains("predictive_center_error"), "{text}");
    for file in [
        "evaluation.txt",
        "predictive/events.csv",
        "lookback/events.csv",
    ] {
        assert!(eval_out.join(file).exists(), "missing {file}");
    }

    // A trained checkpoint also drives predictive centering in replay.
    let replay_out = dir.path().join("replay");
    let replay = bin()
        .args(["replay", "--config"])
        .arg(&config)
        .arg("--checkpoint")
        .arg(train_out.join("predictor.json"))
        .arg("--out")
        .arg(&replay_out)
        .output()
        .unwrap();
    assert_code(&replay, 0);
}

#[test]
fn resume_reproduces_uninterrupted_training() {
    let dir = tempfile::tempdir().unwrap();
    let full_config = dir.path().join("full.toml");
    let half_config = dir.path().join("half.toml");
    let base = r#"
version = 1

[run]
seed = 21

[data.synth-sine]
n = 200
period = 60.0
amplitude = 0.1
center = 0.5

[predictor]
window = 10
hidden = 8
horizon = 2
batch = 16
"#;
    write(&full_config, &format!("{base}epochs = 8\n"));
    write(&half_config, &format!("{base}epochs = 4\n"));

    let full_out = dir.path().join("full");
    assert_code(
        &bin()
            .args(["train-predictor", "--config"])
            .arg(&full_config)
            .arg("--out")
            .arg(&full_out)
            .output()
            .unwrap(),
        0,
    );

    let half_out = dir.path().join("half");
    assert_code(
        &bin()
            .args(["train-predictor", "--config"])
            .arg(&half_config)
            .arg("--out")
            .arg(&half_out)
            .output()
            .unwrap(),
        0,
    );
    let resumed_out = dir.path().join("resumed");
    assert_code(
        &bin()
            .args(["train-predictor", "--config"])
            .arg(&full_config)
            .arg("--resume")
            .arg(half_out.join("predictor.json"))
            .arg("--out")
            .arg(&resumed_out)
            .output()
            .unwrap(),
        0,
    );

    let full_ckpt = std::fs::read(full_out.join("predictor.json")).unwrap();
    let resumed_ckpt = std::fs::read(resumed_out.join("predictor.json")).unwrap();
    assert_eq!(
        full_ckpt, resumed_ckpt,
        "resumed trajectory diverged from the uninterrupted one"
    );
}
