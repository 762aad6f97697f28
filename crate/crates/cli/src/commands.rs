//! The five subcommand implementations.

use std::path::{Path, PathBuf};

use radflow::*;

use crate::config::{
    load_config, BenchConfig, EvalConfig, GenerateConfig, Part, SolveConfig, SplitMode, SplitSpec,
    TrainConfig,
};
use crate::manifest::write_manifest;

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// generate

pub struct GenerateOpts {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub n_buses: Option<usize>,
    pub n_samples: Option<usize>,
}

pub fn cmd_generate(opts: &GenerateOpts) -> Result<()> {
    let mut config: GenerateConfig = load_config(opts.config.as_deref())?;
    if let Some(n) = opts.n_buses {
        config.grid.n_buses = n;
    }
    if let Some(n) = opts.n_samples {
        config.n_samples = n;
    }
    if let Some(seed) = opts.seed {
        // One master seed drives both topology and scenario streams.
        config.grid.seed = seed;
        config.scenario.seed = seed.wrapping_add(1);
    }
    ensure_out_dir(&opts.out)?;

    let grid = gen_grid(&config.grid)?;
    save_grid(&grid, &opts.out.join("grid.json"))?;
    let dataset = build_dataset(&grid, &config.scenario, config.n_samples, &config.dataset)?;
    save_dataset(&dataset, &opts.out.join("dataset.jsonl"))?;

    let inputs: Vec<&Path> = opts.config.as_deref().into_iter().collect();
    write_manifest(
        &opts.out,
        "generate",
        opts.seed,
        &config,
        &inputs,
        &["grid.json", "dataset.jsonl"],
    )?;
    println!(
        "generated {}-bus grid ({}) and {} labeled scenarios -> {}",
        grid.n_buses(),
        grid_hash(&grid),
        dataset.len(),
        opts.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// train

pub struct TrainOpts {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub grids: Vec<PathBuf>,
    pub datas: Vec<PathBuf>,
    pub variant: Option<String>,
    pub split: Option<String>,
    pub split_mode: Option<String>,
    pub holdout: Option<usize>,
}

/// A loaded (grid, orientation, dataset) triple.
struct LoadedPair {
    ori: Orientation,
    samples: Vec<LabeledSample>,
}

fn load_pairs(grids: &[PathBuf], datas: &[PathBuf]) -> Result<Vec<LoadedPair>> {
    if grids.is_empty() {
        return Err(Error::BadConfig("at least one --grid is required".into()));
    }
    if grids.len() != datas.len() {
        return Err(Error::BadConfig(format!(
            "{} --grid flags but {} --data flags; they pair up by position",
            grids.len(),
            datas.len()
        )));
    }
    grids
        .iter()
        .zip(datas)
        .map(|(gp, dp)| {
            let grid = load_grid(gp)?;
            let samples = load_dataset(dp)?;
            validate_dataset(&grid, &samples)?;
            Ok(LoadedPair {
                ori: orient(&grid)?,
                samples,
            })
        })
        .collect()
}

pub fn cmd_train(opts: &TrainOpts) -> Result<()> {
    let mut config: TrainConfig = load_config(opts.config.as_deref())?;
    if let Some(v) = &opts.variant {
        config.variant = v.parse()?;
    }
    if let Some(s) = &opts.split {
        config.split = s.clone();
    }
    if let Some(m) = &opts.split_mode {
        config.split_mode = m.parse()?;
    }
    if let Some(h) = opts.holdout {
        config.holdout = Some(h);
    }
    if let Some(seed) = opts.seed {
        config.params.seed = seed;
    }
    let split: SplitSpec = config.split.parse()?;
    ensure_out_dir(&opts.out)?;

    let pairs = load_pairs(&opts.grids, &opts.datas)?;

    // Assemble training and validation networks per the split mode.
    let mut train_nets: Vec<NetworkData<'_>> = Vec::new();
    let mut val_nets: Vec<NetworkData<'_>> = Vec::new();
    match config.split_mode {
        SplitMode::Scenario => {
            if pairs.len() != 1 {
                return Err(Error::BadConfig(format!(
                    "scenario split mode takes exactly one grid/dataset pair, got {}",
                    pairs.len()
                )));
            }
            let pair = &pairs[0];
            let (tr, va, _te) = split.partition(pair.samples.len());
            train_nets.push(NetworkData {
                ori: &pair.ori,
                samples: &pair.samples[tr],
            });
            if !va.is_empty() {
                val_nets.push(NetworkData {
                    ori: &pair.ori,
                    samples: &pair.samples[va],
                });
            }
        }
        SplitMode::Grid => {
            if pairs.len() < 2 {
                return Err(Error::BadConfig(
                    "grid split mode needs at least two grid/dataset pairs".into(),
                ));
            }
            let holdout = config.holdout.unwrap_or(pairs.len() - 1);
            if holdout >= pairs.len() {
                return Err(Error::BadConfig(format!(
                    "holdout index {holdout} out of range for {} pairs",
                    pairs.len()
                )));
            }
            for (i, pair) in pairs.iter().enumerate() {
                let net = NetworkData {
                    ori: &pair.ori,
                    samples: &pair.samples,
                };
                if i == holdout {
                    val_nets.push(net);
                } else {
                    train_nets.push(net);
                }
            }
        }
    }

    let eval_arg = if val_nets.is_empty() {
        None
    } else {
        Some(val_nets.as_slice())
    };
    let (predictor, curve) =
        train_with_eval(&train_nets, config.variant, &config.params, eval_arg)?;

    predictor.save(&opts.out.join("predictor.json"))?;
    let mut log = String::from("round,val_rmse\n");
    for (i, v) in curve.iter().enumerate() {
        log.push_str(&format!("{},{:e}\n", i + 1, v));
    }
    std::fs::write(opts.out.join("train_log.csv"), log)?;

    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(opts.config.as_deref());
    inputs.extend(opts.grids.iter().map(|p| p.as_path()));
    inputs.extend(opts.datas.iter().map(|p| p.as_path()));
    write_manifest(
        &opts.out,
        "train",
        opts.seed,
        &config,
        &inputs,
        &["predictor.json", "train_log.csv"],
    )?;
    let final_val = curve.last().map_or(String::from("n/a"), |v| format!("{v:.3e}"));
    println!(
        "trained {} predictor on {} network(s), {} rounds, final val rmse {} -> {}",
        config.variant,
        train_nets.len(),
        config.params.n_estimators,
        final_val,
        opts.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// eval

pub struct EvalOpts {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub grid: PathBuf,
    pub data: PathBuf,
    pub method: String,
    pub model: Option<PathBuf>,
    pub split: Option<String>,
    pub part: Option<String>,
    pub anchor: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum EvalMethod {
    Xgb(Variant),
    Lindistflow,
    Distflow,
}

fn parse_eval_method(s: &str) -> Result<EvalMethod> {
    match s {
        "xgb-absolute" => Ok(EvalMethod::Xgb(Variant::Absolute)),
        "xgb-parent" => Ok(EvalMethod::Xgb(Variant::ParentResidual)),
        "xgb-ldf" => Ok(EvalMethod::Xgb(Variant::PhysicsResidual)),
        "lindistflow" => Ok(EvalMethod::Lindistflow),
        "distflow" => Ok(EvalMethod::Distflow),
        other => Err(Error::BadConfig(format!(
            "unknown eval method '{other}' (expected xgb-absolute, xgb-parent, xgb-ldf, lindistflow, or distflow)"
        ))),
    }
}

fn load_matching_predictor(
    model: Option<&Path>,
    expected: Variant,
) -> Result<TrainedPredictor> {
    let path = model.ok_or_else(|| {
        Error::BadConfig("this method needs --model pointing at a predictor file".into())
    })?;
    let predictor = TrainedPredictor::load(path)?;
    if predictor.variant != expected {
        return Err(Error::BadConfig(format!(
            "model at {} was trained for variant '{}' but the method expects '{expected}'",
            path.display(),
            predictor.variant
        )));
    }
    Ok(predictor)
}

pub fn cmd_eval(opts: &EvalOpts) -> Result<()> {
    let mut config: EvalConfig = load_config(opts.config.as_deref())?;
    if let Some(s) = &opts.split {
        config.split = s.clone();
    }
    if let Some(p) = &opts.part {
        config.part = p.parse()?;
    }
    if let Some(a) = &opts.anchor {
        config.anchor = a.parse()?;
    }
    let split: SplitSpec = config.split.parse()?;
    let method = parse_eval_method(&opts.method)?;
    ensure_out_dir(&opts.out)?;

    let grid = load_grid(&opts.grid)?;
    let dataset = load_dataset(&opts.data)?;
    validate_dataset(&grid, &dataset)?;
    let ori = orient(&grid)?;

    let (tr, va, te) = split.partition(dataset.len());
    let range = match config.part {
        Part::Train => tr,
        Part::Val => va,
        Part::Test => te,
        Part::All => 0..dataset.len(),
    };
    if range.is_empty() {
        return Err(Error::EmptyInput);
    }
    let part_samples = &dataset[range.clone()];

    let predictions: Vec<VoltageState> = match method {
        EvalMethod::Lindistflow => part_samples
            .iter()
            .map(|s| lindistflow_solve(&ori, &s.scenario))
            .collect(),
        EvalMethod::Distflow => part_samples
            .iter()
            .map(|s| distflow_solve(&ori, &s.scenario, &config.solver))
            .collect::<Result<_>>()?,
        EvalMethod::Xgb(variant) => {
            let predictor = load_matching_predictor(opts.model.as_deref(), variant)?;
            let infer_opts = InferOptions {
                ldf_anchor: config.anchor,
            };
            part_samples
                .iter()
                .map(|s| predictor.infer(&ori, &s.scenario, &infer_opts))
                .collect()
        }
    };
    let truths: Vec<VoltageState> = part_samples.iter().map(|s| s.truth.clone()).collect();
    let report = evaluate(&ori, &predictions, &truths)?;

    let report_json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    std::fs::write(opts.out.join("report.json"), report_json + "\n")?;
    std::fs::write(opts.out.join("per_hop.csv"), per_hop_csv(&report.per_hop))?;

    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(opts.config.as_deref());
    inputs.push(&opts.grid);
    inputs.push(&opts.data);
    inputs.extend(opts.model.as_deref());
    write_manifest(
        &opts.out,
        "eval",
        None,
        &config,
        &inputs,
        &["report.json", "per_hop.csv"],
    )?;
    println!(
        "{} on {} scenarios ({} buses): rmse_vm={:e} pu, rmse_va={:e} deg -> {}",
        opts.method,
        report.n_samples,
        report.n_buses,
        report.rmse_vm,
        report.rmse_va,
        opts.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// solve

pub struct SolveOpts {
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub grid: PathBuf,
    pub scenario: PathBuf,
    pub method: String,
    pub model: Option<PathBuf>,
}

pub fn cmd_solve(opts: &SolveOpts) -> Result<()> {
    let config: SolveConfig = load_config(opts.config.as_deref())?;
    ensure_out_dir(&opts.out)?;
    let grid = load_grid(&opts.grid)?;
    let scenario = load_scenario(&opts.scenario)?;
    validate_scenario(&grid, &scenario)?;
    let ori = orient(&grid)?;

    let state = match opts.method.as_str() {
        "ldf" => lindistflow_solve(&ori, &scenario),
        "distflow" => distflow_solve(&ori, &scenario, &config.solver)?,
        "ac" => ac_oracle_solve(&ori, &scenario, &config.solver)?,
        "xgb" => {
            let path = opts.model.as_deref().ok_or_else(|| {
                Error::BadConfig("method 'xgb' needs --model pointing at a predictor file".into())
            })?;
            let predictor = TrainedPredictor::load(path)?;
            let infer_opts = InferOptions {
                ldf_anchor: config.anchor,
            };
            predictor.infer(&ori, &scenario, &infer_opts)
        }
        other => {
            return Err(Error::BadConfig(format!(
                "unknown solve method '{other}' (expected ldf, distflow, ac, or xgb)"
            )))
        }
    };
    save_state(&state, &opts.out.join("state.json"))?;

    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(opts.config.as_deref());
    inputs.push(&opts.grid);
    inputs.push(&opts.scenario);
    inputs.extend(opts.model.as_deref());
    write_manifest(&opts.out, "solve", None, &config, &inputs, &["state.json"])?;
    let vmin = state.vm.iter().copied().fold(f64::INFINITY, f64::min);
    println!(
        "solved {} buses with {} (min vm {:.4} pu) -> {}",
        state.n_buses(),
        opts.method,
        vmin,
        opts.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

pub struct BenchOpts {
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub model: Option<PathBuf>,
    pub control: bool,
    pub sizes: Option<String>,
}

pub fn cmd_bench(opts: &BenchOpts) -> Result<()> {
    let mut config: BenchConfig = load_config(opts.config.as_deref())?;
    if let Some(sizes) = &opts.sizes {
        config.scaling.sizes = sizes
            .split(',')
            .map(|s| {
                s.trim().parse::<usize>().map_err(|_| {
                    Error::BadConfig(format!("--sizes: '{s}' is not a bus count"))
                })
            })
            .collect::<Result<_>>()?;
    }
    if let Some(seed) = opts.seed {
        config.scaling.grid.seed = seed;
        config.scaling.scenario.seed = seed.wrapping_add(1);
    }
    ensure_out_dir(&opts.out)?;

    let mut predictor_subject;
    let mut control_subject;
    let subject: &mut dyn InferenceSubject = if opts.control {
        control_subject = ConstantTimeControl::new(config.control_work);
        &mut control_subject
    } else {
        let path = opts.model.as_deref().ok_or_else(|| {
            Error::BadConfig("bench needs --model (or --control for the baseline subject)".into())
        })?;
        predictor_subject = TrainedPredictor::load(path)?;
        &mut predictor_subject
    };

    let report = scaling_study(subject, &config.scaling, None)?;
    let report_json =
        serde_json::to_string_pretty(&report).expect("report serialization cannot fail");
    std::fs::write(opts.out.join("scaling_report.json"), report_json + "\n")?;
    std::fs::write(opts.out.join("scaling.csv"), scaling_csv(&report))?;

    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(opts.config.as_deref());
    inputs.extend(opts.model.as_deref());
    write_manifest(
        &opts.out,
        "bench",
        opts.seed,
        &config,
        &inputs,
        &["scaling_report.json", "scaling.csv"],
    )?;
    println!(
        "benchmarked '{}' over {} sizes: {:.3e} ms/bus (r2 {:.3}) -> {}",
        report.subject,
        report.points.len(),
        report.linear_fit.slope,
        report.linear_fit.r2,
        opts.out.display()
    );
    Ok(())
}
