//! Accuracy metrics and the inference-time scaling study.
//!
//! RMSE pools squared errors globally over all (bus, sample) pairs rather
//! than averaging per-network figures; buses whose values are inputs
//! (the slack) are excluded through an explicit exclusion list. The
//! per-depth profile buckets the same pool by hop count from the root, so
//! its count-weighted recombination reproduces the pooled figure exactly.
//!
//! Timing runs are strictly single-threaded and exclude all setup
//! (grid/scenario generation, subject preparation) from the measured
//! window; instrumentation hooks let tests assert that contract.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::datagen::{gen_grid, gen_scenario, mix, GridGenConfig, ScenarioGenConfig};
use crate::error::{Error, Result};
use crate::grid::{Scenario, VoltageState};
use crate::path::{orient, Orientation};
use crate::sequential::{InferOptions, TrainedPredictor};

/// Pooled root-mean-square error between aligned prediction/truth lists,
/// separately for magnitude (per-unit) and angle (degrees).
///
/// `exclude` lists bus ids whose entries are dropped from the pool —
/// normally the slack, whose state is an input, not a prediction. Pass an
/// empty slice to pool every bus.
pub fn rmse(
    predictions: &[VoltageState],
    truths: &[VoltageState],
    exclude: &[usize],
) -> Result<(f64, f64)> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            what: "sample count",
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut sq_vm = 0.0;
    let mut sq_va = 0.0;
    let mut count = 0usize;
    for (pred, truth) in predictions.iter().zip(truths) {
        let n = truth.n_buses();
        if pred.n_buses() != n {
            return Err(Error::DimensionMismatch {
                what: "state length",
                expected: n,
                got: pred.n_buses(),
            });
        }
        for j in 0..n {
            if exclude.contains(&j) {
                continue;
            }
            sq_vm += (pred.vm[j] - truth.vm[j]).powi(2);
            sq_va += (pred.va[j] - truth.va[j]).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(((sq_vm / count as f64).sqrt(), (sq_va / count as f64).sqrt()))
}

/// RMSE of one depth bucket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopRmse {
    /// Hops from the root; 1 is the first predicted ring.
    pub depth: usize,
    pub rmse_vm: f64,
    pub rmse_va: f64,
    /// Number of (bus, sample) pairs pooled into this bucket.
    pub count: usize,
}

/// Buckets errors by each bus's hop distance from the root and reports
/// RMSE per bucket, for depths 1..=max_depth (depth 0 is the root, whose
/// state is an input). Every depth is populated: a bus at depth d implies
/// ancestors at every shallower depth.
pub fn per_hop_profile(
    ori: &Orientation,
    predictions: &[VoltageState],
    truths: &[VoltageState],
) -> Result<Vec<HopRmse>> {
    if predictions.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            what: "sample count",
            expected: truths.len(),
            got: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = ori.n_buses();
    let max_depth = ori.max_depth();
    let mut sq_vm = vec![0.0; max_depth + 1];
    let mut sq_va = vec![0.0; max_depth + 1];
    let mut counts = vec![0usize; max_depth + 1];
    for (pred, truth) in predictions.iter().zip(truths) {
        if pred.n_buses() != n || truth.n_buses() != n {
            return Err(Error::DimensionMismatch {
                what: "state length",
                expected: n,
                got: pred.n_buses().min(truth.n_buses()),
            });
        }
        for j in 0..n {
            let d = ori.depth[j];
            if d == 0 {
                continue;
            }
            sq_vm[d] += (pred.vm[j] - truth.vm[j]).powi(2);
            sq_va[d] += (pred.va[j] - truth.va[j]).powi(2);
            counts[d] += 1;
        }
    }
    Ok((1..=max_depth)
        .map(|d| HopRmse {
            depth: d,
            rmse_vm: (sq_vm[d] / counts[d] as f64).sqrt(),
            rmse_va: (sq_va[d] / counts[d] as f64).sqrt(),
            count: counts[d],
        })
        .collect())
}

/// Accuracy summary for one evaluation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Pooled magnitude RMSE in per-unit, root excluded.
    pub rmse_vm: f64,
    /// Pooled angle RMSE in degrees, root excluded.
    pub rmse_va: f64,
    pub per_hop: Vec<HopRmse>,
    pub n_samples: usize,
    pub n_buses: usize,
}

/// Computes the pooled RMSE (root excluded) plus the per-depth profile.
pub fn evaluate(
    ori: &Orientation,
    predictions: &[VoltageState],
    truths: &[VoltageState],
) -> Result<EvalReport> {
    let root = ori.bfs_order[0];
    let (rmse_vm, rmse_va) = rmse(predictions, truths, &[root])?;
    let per_hop = per_hop_profile(ori, predictions, truths)?;
    Ok(EvalReport {
        rmse_vm,
        rmse_va,
        per_hop,
        n_samples: predictions.len(),
        n_buses: ori.n_buses(),
    })
}

/// CSV rendering of a per-depth profile, one row per bucket.
pub fn per_hop_csv(profile: &[HopRmse]) -> String {
    let mut out = String::from("depth,rmse_vm_pu,rmse_va_deg,count\n");
    for h in profile {
        out.push_str(&format!(
            "{},{:e},{:e},{}\n",
            h.depth, h.rmse_vm, h.rmse_va, h.count
        ));
    }
    out
}

/// Anything whose per-scenario inference can be timed.
///
/// `prepare` runs once per grid, outside every timed window — put
/// deserialization, buffer sizing, or other setup there.
pub trait InferenceSubject {
    fn name(&self) -> &str;
    fn prepare(&mut self, ori: &Orientation);
    fn infer(&mut self, ori: &Orientation, scenario: &Scenario) -> VoltageState;
}

impl InferenceSubject for TrainedPredictor {
    fn name(&self) -> &str {
        match self.variant {
            crate::sequential::Variant::Absolute => "xgb-absolute",
            crate::sequential::Variant::ParentResidual => "xgb-parent",
            crate::sequential::Variant::PhysicsResidual => "xgb-ldf",
        }
    }

    fn prepare(&mut self, _ori: &Orientation) {}

    fn infer(&mut self, ori: &Orientation, scenario: &Scenario) -> VoltageState {
        TrainedPredictor::infer(self, ori, scenario, &InferOptions::default())
    }
}

/// Control subject whose work per scenario is independent of grid size:
/// a fixed busy-work loop plus one flat-state allocation. Its fitted
/// slope bounds the harness's own size-dependent overhead.
pub struct ConstantTimeControl {
    /// Busy-work iterations per call.
    pub work: u32,
    sink: f64,
}

impl ConstantTimeControl {
    pub fn new(work: u32) -> Self {
        ConstantTimeControl { work, sink: 0.0 }
    }
}

impl InferenceSubject for ConstantTimeControl {
    fn name(&self) -> &str {
        "constant-control"
    }

    fn prepare(&mut self, _ori: &Orientation) {}

    fn infer(&mut self, ori: &Orientation, scenario: &Scenario) -> VoltageState {
        let mut acc = 0.0f64;
        for k in 0..self.work {
            acc += (k as f64 * 0.001).sin();
        }
        self.sink += acc;
        VoltageState::flat(ori.n_buses(), scenario.slack_vm, scenario.slack_va)
    }
}

/// Least-squares line through (x, y) points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Coefficient of determination, clamped to [0, 1].
    pub r2: f64,
}

/// Simple linear regression with intercept. Panics on fewer than two
/// points or zero x-variance (callers validate sizes first).
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points to fit a line");
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    assert!(sxx > 0.0, "x values must not all coincide");
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        ss_res += (y - (slope * x + intercept)).powi(2);
        ss_tot += (y - mean_y).powi(2);
    }
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        // All y equal: the horizontal line explains everything.
        1.0
    };
    LinearFit {
        slope,
        intercept,
        r2,
    }
}

/// One measured grid size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n_buses: usize,
    /// Mean over scenarios of the median-of-repetitions wall time.
    pub mean_inference_ms: f64,
    /// Sample standard deviation across scenarios (0 for one scenario).
    pub std_ms: f64,
}

/// Result of the inference-time scaling study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub subject: String,
    pub points: Vec<ScalingPoint>,
    pub linear_fit: LinearFit,
}

/// CSV rendering of the scaling points.
pub fn scaling_csv(report: &ScalingReport) -> String {
    let mut out = String::from("n_buses,mean_inference_ms,std_ms\n");
    for p in &report.points {
        out.push_str(&format!(
            "{},{:e},{:e}\n",
            p.n_buses, p.mean_inference_ms, p.std_ms
        ));
    }
    out
}

/// Scaling study configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScalingConfig {
    /// Grid sizes to measure; at least three distinct values.
    pub sizes: Vec<usize>,
    /// Scenarios drawn per size; each contributes one median time.
    pub scenarios_per_size: usize,
    /// Timed repetitions per scenario (median taken).
    pub repetitions: usize,
    /// Untimed runs per scenario before measuring.
    pub warmups: usize,
    /// Topology parameters; `n_buses` is overridden per size and the seed
    /// is remixed per size so each size gets a distinct grid.
    pub grid: GridGenConfig,
    pub scenario: ScenarioGenConfig,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        ScalingConfig {
            sizes: vec![15, 44, 59, 97, 111, 116, 129],
            scenarios_per_size: 5,
            repetitions: 10,
            warmups: 3,
            grid: GridGenConfig::default(),
            scenario: ScenarioGenConfig::default(),
        }
    }
}

/// Lifecycle notifications from the timing harness, for tests that
/// assert setup stays outside the measured windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookEvent {
    /// Subject preparation for this grid size finished.
    Prepared { size: usize },
    /// A timed window is opening (one per scenario; repetitions inside).
    WindowStart { size: usize, scenario: usize },
    /// The timed window closed.
    WindowEnd { size: usize, scenario: usize },
}

/// Measures wall-clock inference time per scenario across grid sizes and
/// fits time against size.
///
/// Per size: generate a fresh grid, `prepare` the subject (untimed), then
/// for each scenario run the warm-ups untimed and take the median of the
/// timed repetitions; the size's point is the mean and standard deviation
/// of those medians. Runs strictly sequentially on the calling thread.
pub fn scaling_study(
    subject: &mut dyn InferenceSubject,
    config: &ScalingConfig,
    mut hooks: Option<&mut dyn FnMut(HookEvent)>,
) -> Result<ScalingReport> {
    if config.sizes.len() < 3 {
        return Err(Error::BadConfig(format!(
            "scaling study needs at least 3 sizes, got {}",
            config.sizes.len()
        )));
    }
    let mut seen = config.sizes.clone();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::BadConfig(
            "scaling study sizes must be distinct".to_string(),
        ));
    }
    if config.scenarios_per_size == 0 || config.repetitions == 0 {
        return Err(Error::BadConfig(
            "scenarios_per_size and repetitions must be positive".to_string(),
        ));
    }

    let mut points = Vec::with_capacity(config.sizes.len());
    for &size in &config.sizes {
        let grid_config = GridGenConfig {
            n_buses: size,
            seed: mix(config.grid.seed, size as u64),
            ..config.grid.clone()
        };
        let grid = gen_grid(&grid_config)?;
        let ori = orient(&grid)?;
        let scenarios: Vec<Scenario> = (0..config.scenarios_per_size)
            .map(|draw| gen_scenario(&grid, &config.scenario, draw))
            .collect::<Result<_>>()?;

        subject.prepare(&ori);
        if let Some(h) = hooks.as_deref_mut() {
            h(HookEvent::Prepared { size });
        }

        let mut medians_ms = Vec::with_capacity(scenarios.len());
        for (si, scenario) in scenarios.iter().enumerate() {
            for _ in 0..config.warmups {
                std::hint::black_box(subject.infer(&ori, scenario));
            }
            if let Some(h) = hooks.as_deref_mut() {
                h(HookEvent::WindowStart { size, scenario: si });
            }
            let mut times = Vec::with_capacity(config.repetitions);
            for _ in 0..config.repetitions {
                let start = Instant::now();
                std::hint::black_box(subject.infer(&ori, scenario));
                times.push(start.elapsed().as_secs_f64() * 1e3);
            }
            if let Some(h) = hooks.as_deref_mut() {
                h(HookEvent::WindowEnd { size, scenario: si });
            }
            times.sort_by(f64::total_cmp);
            let mid = times.len() / 2;
            let median = if times.len() % 2 == 1 {
                times[mid]
            } else {
                0.5 * (times[mid - 1] + times[mid])
            };
            medians_ms.push(median);
        }

        let n = medians_ms.len() as f64;
        let mean = medians_ms.iter().sum::<f64>() / n;
        let std = if medians_ms.len() > 1 {
            (medians_ms.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        points.push(ScalingPoint {
            n_buses: size,
            mean_inference_ms: mean,
            std_ms: std,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| p.n_buses as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_inference_ms).collect();
    let fit = linear_fit(&xs, &ys);
    Ok(ScalingReport {
        subject: subject.name().to_string(),
        points,
        linear_fit: fit,
    })
}
