//! From-scratch gradient-boosted regression trees with squared-error
//! objective, exact greedy split search, and vector-valued (multi-output)
//! leaves.
//!
//! The ensemble predicts `base_score + learning_rate · Σ_t tree_t(x)`,
//! each tree restricted to its output slice (all outputs for
//! [`MultiStrategy::MultiOutputTree`], one output per tree otherwise).
//! Training lives in the sibling `fit` module; this module holds the data
//! model, prediction, validation, and the versioned JSON format.

mod fit;

pub use fit::{fit, fit_with_eval};

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense numeric matrix used for features, targets, and
/// predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from equally sized rows; errors on ragged input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: cols,
                    got: rows[i].len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(DenseMatrix {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Builds from fixed-size array rows (infallible layout).
    pub fn from_fixed<const K: usize>(rows: &[[f64; K]]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * K);
        for row in rows {
            data.extend_from_slice(row);
        }
        DenseMatrix {
            rows: rows.len(),
            cols: K,
            data,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }
}

/// How a multi-output target is distributed across trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiStrategy {
    /// One tree per boosting round; leaves hold one value per output.
    MultiOutputTree,
    ///K trees per round, each fitting a single output.
    OneOutputPerTree,
}

/// Training hyperparameters. Defaults mirror the tuned configuration the
/// predictor ships with: 200 rounds of depth-7 trees, learning rate 0.5,
/// min_child_weight 5, row subsampling 0.9, no column subsampling,
/// L2 leaf regularization 1.0, multi-output trees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbtParams {
    pub n_estimators: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
    pub reg_lambda: f64,
    pub multi_strategy: MultiStrategy,
    pub seed: u64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_estimators: 200,
            max_depth: 7,
            learning_rate: 0.5,
            min_child_weight: 5.0,
            subsample: 0.9,
            colsample_bytree: 1.0,
            reg_lambda: 1.0,
            multi_strategy: MultiStrategy::MultiOutputTree,
            seed: 0,
        }
    }
}

impl GbtParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_estimators < 1 {
            return Err(Error::BadConfig("n_estimators must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(Error::BadConfig("max_depth must be >= 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::BadConfig("learning_rate must be positive".into()));
        }
        for (name, v) in [
            ("subsample", self.subsample),
            ("colsample_bytree", self.colsample_bytree),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::BadConfig(format!("{name} must lie in (0, 1]")));
            }
        }
        if !(self.reg_lambda.is_finite() && self.reg_lambda >= 0.0) {
            return Err(Error::BadConfig("reg_lambda must be >= 0".into()));
        }
        if !(self.min_child_weight.is_finite() && self.min_child_weight >= 0.0) {
            return Err(Error::BadConfig("min_child_weight must be >= 0".into()));
        }
        Ok(())
    }
}

fn default_true() -> bool {
    true
}

/// One node of a regression tree, stored in a flat array with the root at
/// index 0; split children always come after their parent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: u32,
        right: u32,
        /// Routing for NaN feature values. Inputs in this crate are fully
        /// dense, so this is always written as `true`; it is honored on
        /// read for forward compatibility.
        #[serde(default = "default_true")]
        missing_goes_left: bool,
    },
    Leaf {
        values: Vec<f64>,
    },
}

/// A single regression tree plus the output positions its leaf values
/// feed (absent = all outputs in order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_slice: Option<Vec<usize>>,
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Routes a feature row to its leaf and returns the leaf values.
    /// Assumes a validated tree (indices in bounds, children after
    /// parents).
    pub fn eval<'a>(&'a self, features: &[f64]) -> &'a [f64] {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { values } => return values,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    missing_goes_left,
                } => {
                    let v = features[*feature];
                    let go_left = if v.is_nan() {
                        *missing_goes_left
                    } else {
                        v < *threshold
                    };
                    idx = if go_left { *left as usize } else { *right as usize };
                }
            }
        }
    }

    /// Longest root-to-leaf path measured in splits.
    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left as usize).max(walk(nodes, *right as usize))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Serialization format version this crate reads and writes.
pub const GBT_FORMAT_VERSION: u32 = 1;

/// A fitted boosted ensemble.
///
/// Prediction contract: `base_score + learning_rate · Σ_t tree_t(x)`,
/// with each tree's leaf vector added at the positions named by its
/// `output_slice` (or all outputs when absent). Leaf values are stored
/// unscaled; the learning rate is applied at prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub version: u32,
    pub feature_dim: usize,
    pub output_dim: usize,
    pub base_score: Vec<f64>,
    pub learning_rate: f64,
    pub multi_strategy: MultiStrategy,
    pub trees: Vec<Tree>,
    pub params: GbtParams,
}

impl GbtModel {
    /// Structural validation: version, dimension agreement between the
    /// envelope and `params`, and well-formed trees (indices in bounds,
    /// children strictly after parents, leaf widths matching the output
    /// slice).
    pub fn validate(&self) -> Result<()> {
        if self.version != GBT_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                expected: GBT_FORMAT_VERSION,
                got: self.version,
            });
        }
        if self.feature_dim == 0 || self.output_dim == 0 {
            return Err(Error::SchemaError(
                "feature_dim and output_dim must be positive".into(),
            ));
        }
        if self.base_score.len() != self.output_dim {
            return Err(Error::SchemaError(format!(
                "base_score has {} entries for output_dim {}",
                self.base_score.len(),
                self.output_dim
            )));
        }
        if self.learning_rate != self.params.learning_rate {
            return Err(Error::SchemaError(format!(
                "envelope learning_rate {} disagrees with params.learning_rate {}",
                self.learning_rate, self.params.learning_rate
            )));
        }
        if self.multi_strategy != self.params.multi_strategy {
            return Err(Error::SchemaError(
                "envelope multi_strategy disagrees with params.multi_strategy".into(),
            ));
        }

        for (ti, tree) in self.trees.iter().enumerate() {
            if tree.nodes.is_empty() {
                return Err(Error::SchemaError(format!("tree {ti} has no nodes")));
            }
            let width = match &tree.output_slice {
                None => self.output_dim,
                Some(slice) => {
                    if slice.is_empty() {
                        return Err(Error::SchemaError(format!(
                            "tree {ti} has an empty output_slice"
                        )));
                    }
                    for &k in slice {
                        if k >= self.output_dim {
                            return Err(Error::SchemaError(format!(
                                "tree {ti} output_slice index {k} out of range"
                            )));
                        }
                    }
                    slice.len()
                }
            };
            for (ni, node) in tree.nodes.iter().enumerate() {
                match node {
                    TreeNode::Leaf { values } => {
                        if values.len() != width {
                            return Err(Error::SchemaError(format!(
                                "tree {ti} node {ni}: leaf width {} != expected {width}",
                                values.len()
                            )));
                        }
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        left,
                        right,
                        ..
                    } => {
                        if *feature >= self.feature_dim {
                            return Err(Error::SchemaError(format!(
                                "tree {ti} node {ni}: feature {feature} out of range"
                            )));
                        }
                        if !threshold.is_finite() {
                            return Err(Error::SchemaError(format!(
                                "tree {ti} node {ni}: non-finite threshold"
                            )));
                        }
                        let (l, r) = (*left as usize, *right as usize);
                        if l >= tree.nodes.len() || r >= tree.nodes.len() || l <= ni || r <= ni {
                            return Err(Error::SchemaError(format!(
                                "tree {ti} node {ni}: child indices must point past the \
                                 parent and stay in bounds"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Predicts one feature row.
    pub fn predict_row(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                what: "feature row",
                expected: self.feature_dim,
                got: features.len(),
            });
        }
        let mut out = self.base_score.clone();
        for tree in &self.trees {
            let leaf = tree.eval(features);
            match &tree.output_slice {
                None => {
                    for (k, slot) in out.iter_mut().enumerate() {
                        *slot += self.learning_rate * leaf[k];
                    }
                }
                Some(slice) => {
                    for (pos, &k) in slice.iter().enumerate() {
                        out[k] += self.learning_rate * leaf[pos];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Predicts every row of a batch, row-aligned with the input.
    pub fn predict_batch(&self, features: &DenseMatrix) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(features.n_rows());
        for i in 0..features.n_rows() {
            out.push(self.predict_row(features.row(i))?);
        }
        Ok(out)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    /// Parses and validates a model document.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let model: GbtModel = serde_json::from_str(text)
            .map_err(|e| Error::SchemaError(format!("model document: {e}")))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = BufWriter::new(File::create(path)?);
        let doc = serde_json::to_string_pretty(self).expect("model serialization cannot fail");
        file.write_all(doc.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}
