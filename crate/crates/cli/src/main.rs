//! `radflow` — grid generation, model training, evaluation, single-shot
//! solving, and inference-scaling benchmarks from one binary.
//!
//! Every subcommand writes its artifacts plus a `manifest.json` (resolved
//! config, seed, SHA-256 of each input) into `--out`, so a run can be
//! reproduced from the manifest alone. Failures print a single-line JSON
//! record `{"error": <kind>, "message": <text>}` on stderr and exit 1.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use radflow::Result;

use commands::{BenchOpts, EvalOpts, GenerateOpts, SolveOpts, TrainOpts};

#[derive(Parser)]
#[command(
    name = "radflow",
    version,
    about = "Radial-grid power flow and learned sequential voltage prediction"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic radial grid plus a labeled scenario dataset.
    Generate(GenerateArgs),
    /// Train a sequential voltage predictor on labeled datasets.
    Train(TrainArgs),
    /// Evaluate a prediction method against dataset ground truth.
    Eval(EvalArgs),
    /// Solve one scenario on one grid and write the voltage state.
    Solve(SolveArgs),
    /// Time inference across grid sizes and fit a per-bus cost line.
    Bench(BenchArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// JSON config file; absent fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; drives both the topology and the scenario stream.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Override the number of buses from the config.
    #[arg(long)]
    n_buses: Option<usize>,
    /// Override the number of scenarios from the config.
    #[arg(long)]
    n_samples: Option<usize>,
}

#[derive(Args)]
struct TrainArgs {
    /// JSON config file; absent fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Training seed (feature/row subsampling).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Grid file; repeat to train across networks (pairs with --data by position).
    #[arg(long = "grid")]
    grids: Vec<PathBuf>,
    /// Dataset file; repeat to pair with each --grid.
    #[arg(long = "data")]
    datas: Vec<PathBuf>,
    /// Prediction target: absolute | parent | ldf.
    #[arg(long)]
    variant: Option<String>,
    /// Train:val:test ratio, e.g. 4:1:1 (scenario split mode).
    #[arg(long)]
    split: Option<String>,
    /// How to split: scenario (within one grid) | grid (hold out a network).
    #[arg(long)]
    split_mode: Option<String>,
    /// Which grid/dataset pair to hold out for validation (grid split mode).
    #[arg(long)]
    holdout: Option<usize>,
}

#[derive(Args)]
struct EvalArgs {
    /// JSON config file; absent fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Grid file.
    #[arg(long)]
    grid: PathBuf,
    /// Labeled dataset file.
    #[arg(long)]
    data: PathBuf,
    /// xgb-absolute | xgb-parent | xgb-ldf | lindistflow | distflow.
    #[arg(long)]
    method: String,
    /// Trained predictor file (required for xgb-* methods).
    #[arg(long)]
    model: Option<PathBuf>,
    /// Train:val:test ratio, e.g. 4:1:1.
    #[arg(long)]
    split: Option<String>,
    /// Which slice to score: train | val | test | all.
    #[arg(long)]
    part: Option<String>,
    /// Linearized anchor during inference: predicted-parent | slack-chain.
    #[arg(long)]
    anchor: Option<String>,
}

#[derive(Args)]
struct SolveArgs {
    /// JSON config file; absent fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Grid file.
    #[arg(long)]
    grid: PathBuf,
    /// Scenario file (injections + slack boundary).
    #[arg(long)]
    scenario: PathBuf,
    /// ldf | distflow | ac | xgb.
    #[arg(long)]
    method: String,
    /// Trained predictor file (required for method xgb).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// JSON config file; absent fields fall back to built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed for the benchmark grids and scenarios.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Trained predictor file to benchmark.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Benchmark the constant-work control subject instead of a model.
    #[arg(long, conflicts_with = "model")]
    control: bool,
    /// Comma-separated bus counts, e.g. 15,44,59,97,129.
    #[arg(long)]
    sizes: Option<String>,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => commands::cmd_generate(&GenerateOpts {
            config: a.config,
            seed: a.seed,
            out: a.out,
            n_buses: a.n_buses,
            n_samples: a.n_samples,
        }),
        Command::Train(a) => commands::cmd_train(&TrainOpts {
            config: a.config,
            seed: a.seed,
            out: a.out,
            grids: a.grids,
            datas: a.datas,
            variant: a.variant,
            split: a.split,
            split_mode: a.split_mode,
            holdout: a.holdout,
        }),
        Command::Eval(a) => commands::cmd_eval(&EvalOpts {
            config: a.config,
            out: a.out,
            grid: a.grid,
            data: a.data,
            method: a.method,
            model: a.model,
            split: a.split,
            part: a.part,
            anchor: a.anchor,
        }),
        Command::Solve(a) => commands::cmd_solve(&SolveOpts {
            config: a.config,
            out: a.out,
            grid: a.grid,
            scenario: a.scenario,
            method: a.method,
            model: a.model,
        }),
        Command::Bench(a) => commands::cmd_bench(&BenchOpts {
            config: a.config,
            seed: a.seed,
            out: a.out,
            model: a.model,
            control: a.control,
            sizes: a.sizes,
        }),
    }
}

fn error_record(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = err.print();
                    std::process::exit(0);
                }
                _ => {
                    eprintln!("{}", error_record("bad_usage", &err.to_string()));
                    std::process::exit(1);
                }
            }
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("{}", error_record(err.kind(), &err.to_string()));
        std::process::exit(1);
    }
}
