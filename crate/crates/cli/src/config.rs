//! Command configuration records, their JSON loading, and the
//! train/validation/test split arithmetic.
//!
//! Every command resolves its configuration in three layers: built-in
//! defaults, then an optional `--config` JSON file (partial files are
//! fine — missing fields keep their defaults), then explicit flags.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use radflow::{
    DatasetOptions, Error, GbtParams, GridGenConfig, LdfAnchor, Result, ScalingConfig,
    ScenarioGenConfig, SolverOptions, Variant,
};

/// Loads a config record from JSON, or returns defaults when no file is
/// given. A `manifest.json` from a previous run is accepted directly: its
/// nested `config` object is used, so `--config <old>/manifest.json`
/// reproduces that run.
pub fn load_config<T>(path: Option<&Path>) -> Result<T>
where
    T: serde::de::DeserializeOwned + Default,
{
    let Some(p) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(p)?;
    let schema_err =
        |e: serde_json::Error| Error::SchemaError(format!("config file {}: {e}", p.display()));
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(schema_err)?;
    let config = match &doc {
        serde_json::Value::Object(map) if map.contains_key("command") && map.contains_key("config") => {
            map["config"].clone()
        }
        _ => doc,
    };
    serde_json::from_value(config).map_err(schema_err)
}

/// Configuration for `generate`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub grid: GridGenConfig,
    pub scenario: ScenarioGenConfig,
    /// Number of labeled scenarios to draw.
    pub n_samples: usize,
    pub dataset: DatasetOptions,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            grid: GridGenConfig::default(),
            scenario: ScenarioGenConfig::default(),
            n_samples: 1800,
            dataset: DatasetOptions::default(),
        }
    }
}

/// How `train` partitions its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// One (grid, dataset) pair; scenario indices are split by ratio.
    Scenario,
    /// Several pairs; one whole grid is held out for validation.
    Grid,
}

impl std::str::FromStr for SplitMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scenario" => Ok(SplitMode::Scenario),
            "grid" => Ok(SplitMode::Grid),
            other => Err(Error::BadConfig(format!(
                "unknown split mode '{other}' (expected scenario or grid)"
            ))),
        }
    }
}

/// Configuration for `train`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub variant: Variant,
    pub params: GbtParams,
    /// Train:validation:test ratio over scenario indices.
    pub split: String,
    pub split_mode: SplitMode,
    /// In grid mode, index of the held-out (grid, dataset) pair;
    /// defaults to the last pair.
    pub holdout: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            variant: Variant::ParentResidual,
            params: GbtParams::default(),
            split: "4:1:1".to_string(),
            split_mode: SplitMode::Scenario,
            holdout: None,
        }
    }
}

/// Which split part `eval` scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    Train,
    Val,
    Test,
    All,
}

impl std::str::FromStr for Part {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Part::Train),
            "val" => Ok(Part::Val),
            "test" => Ok(Part::Test),
            "all" => Ok(Part::All),
            other => Err(Error::BadConfig(format!(
                "unknown part '{other}' (expected train, val, test, or all)"
            ))),
        }
    }
}

/// Configuration for `eval`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    /// Must match the split used at training time for the part ranges to
    /// line up.
    pub split: String,
    pub part: Part,
    pub anchor: LdfAnchor,
    pub solver: SolverOptions,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            split: "4:1:1".to_string(),
            part: Part::Test,
            anchor: LdfAnchor::PredictedParent,
            solver: SolverOptions::default(),
        }
    }
}

/// Configuration for `solve`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SolveConfig {
    pub solver: SolverOptions,
    pub anchor: LdfAnchor,
}

/// Configuration for `bench`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchConfig {
    pub scaling: ScalingConfig,
    /// Busy-work iterations for the constant-time control subject.
    pub control_work: u32,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            scaling: ScalingConfig::default(),
            control_work: 2000,
        }
    }
}

/// A normalized train:val:test ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl std::str::FromStr for SplitSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::BadConfig(format!(
                "split '{s}' must have the form train:val:test"
            )));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| {
                p.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::BadConfig(format!("split '{s}': '{p}' is not a number")))
            })
            .collect::<Result<_>>()?;
        if nums.iter().any(|&v| !(v.is_finite() && v >= 0.0)) || nums[0] <= 0.0 {
            return Err(Error::BadConfig(format!(
                "split '{s}' needs non-negative ratios with a positive train share"
            )));
        }
        let total: f64 = nums.iter().sum();
        Ok(SplitSpec {
            train: nums[0] / total,
            val: nums[1] / total,
            test: nums[2] / total,
        })
    }
}

impl SplitSpec {
    /// Contiguous disjoint index ranges covering `0..n`: train, then
    /// validation, then test.
    pub fn partition(&self, n: usize) -> (Range<usize>, Range<usize>, Range<usize>) {
        let t_end = ((n as f64) * self.train).round() as usize;
        let v_end = ((n as f64) * (self.train + self.val)).round() as usize;
        let t_end = t_end.min(n);
        let v_end = v_end.clamp(t_end, n);
        (0..t_end, t_end..v_end, v_end..n)
    }
}
