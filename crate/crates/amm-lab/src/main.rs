//! Thin command-line front end over the library pipelines.

use amm_lab::sim::{
    rederive_report, run_evaluate, run_replay, run_train_agent, run_train_predictor, SimConfig,
    SimError,
};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "amm-lab",
    about = "Desk-scale predictive CPMM laboratory: replay, train, evaluate, report",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for run artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Interpret the CSV value column as a relative price (`t,price,tau`).
    #[arg(long)]
    price_column: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a price series through the pool, reporting losses and fees.
    Replay {
        #[command(flatten)]
        common: CommonArgs,
        /// Optional forecaster checkpoint for predictive fee centering.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Pretrain the LSTM forecaster.
    TrainPredictor {
        #[command(flatten)]
        common: CommonArgs,
        /// Resume from a previous predictor checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Train the dueling double DQN agent against a pretrained forecaster.
    TrainAgent {
        #[command(flatten)]
        common: CommonArgs,
        /// Predictor checkpoint produced by `train-predictor`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Compare predictive fee centering against the look-back baseline.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Predictor checkpoint produced by `train-predictor`.
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Re-derive a run's summary from its per-event CSV and verify it.
    Report {
        /// Run directory containing events.csv, prediction_log.csv, and
        /// summary.txt.
        #[arg(long)]
        run: PathBuf,
    },
}

fn load_config(common: &CommonArgs) -> Result<SimConfig, SimError> {
    let mut config = SimConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.run.seed = Some(seed);
    }
    if common.price_column {
        if let amm_lab::sim::DataSection::Csv { price_column, .. } = &mut config.data {
            *price_column = true;
        } else {
            return Err(SimError::Config(
                "--price-column only applies to csv data sources".to_string(),
            ));
        }
    }
    config.validate()?;
    Ok(config)
}

fn run() -> Result<(), SimError> {
    match Cli::parse().command {
        Command::Replay { common, checkpoint } => {
            let config = load_config(&common)?;
            let predictor = match checkpoint {
                Some(path) => {
                    let ckpt = amm_lab::neural::Checkpoint::load(&path)?;
                    let (p, _, _, _) = amm_lab::predictor::Predictor::from_checkpoint(&ckpt)?;
                    Some(p)
                }
                None => None,
            };
            let artifacts = run_replay(&config, predictor.as_ref(), common.out.as_deref())?;
            print!("{}", artifacts.report.to_summary("replay", config.seed()));
            Ok(())
        }
        Command::TrainPredictor { common, resume } => {
            let config = load_config(&common)?;
            let out = common.out.clone().ok_or_else(|| {
                SimError::Config("train-predictor requires --out for checkpoints".to_string())
            })?;
            let outcome = run_train_predictor(&config, &out, resume.as_deref())?;
            println!("train-predictor: {}", outcome.message);
            if !outcome.converged {
                return Err(SimError::Convergence(outcome.message));
            }
            Ok(())
        }
        Command::TrainAgent { common, checkpoint } => {
            let config = load_config(&common)?;
            let out = common.out.clone().ok_or_else(|| {
                SimError::Config("train-agent requires --out for checkpoints".to_string())
            })?;
            let outcome = run_train_agent(&config, &out, &checkpoint)?;
            println!("train-agent: {}", outcome.message);
            if !outcome.converged {
                return Err(SimError::Convergence(outcome.message));
            }
            Ok(())
        }
        Command::Evaluate { common, checkpoint } => {
            let config = load_config(&common)?;
            let report = run_evaluate(&config, &checkpoint, common.out.as_deref())?;
            print!("{}", report.to_text());
            Ok(())
        }
        Command::Report { run } => {
            let summary_text = std::fs::read_to_string(run.join("summary.txt"))?;
            let summary = amm_lab::sim::parse_summary_file(&summary_text)?;
            let pseudo = summary
                .get("pseudo_arbitrage")
                .map(|v| v == "true")
                .ok_or_else(|| SimError::Report("summary missing pseudo_arbitrage".to_string()))?;
            let seed: u64 = summary
                .get("seed")
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| SimError::Report("summary missing seed".to_string()))?;
            let report = rederive_report(&run, pseudo)?;
            let rendered = report.to_summary("replay", seed);
            if rendered != summary_text {
                return Err(SimError::Report(format!(
                    "summary.txt does not match re-derived metrics\n--- stored ---\n{summary_text}\n--- re-derived ---\n{rendered}"
                )));
            }
            print!("{rendered}");
            println!("report: verified against events.csv");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(SimError::Convergence(msg)) => {
            eprintln!("amm-lab: convergence check failed: {msg}");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("amm-lab: {err}");
            ExitCode::from(1)
        }
    }
}
