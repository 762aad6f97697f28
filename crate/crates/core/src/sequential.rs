//! The sequential voltage predictor: prediction-target variants, pooled
//! training-set assembly with teacher forcing, and autoregressive BFS
//! inference that walks each scenario root-to-leaf, feeding every
//! predicted parent state into its children's feature rows.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytical::{
    lindistflow_solve, lindistflow_step, lindistflow_teacher_forced, LdfStepInput,
};
use crate::error::{Error, Result};
use crate::gbt::{fit_with_eval, DenseMatrix, GbtModel, GbtParams};
use crate::grid::{LabeledSample, Scenario, VoltageState};
use crate::path::{
    aggregate_downstream, extract_edge_samples, feature_row, Orientation, FEATURE_ORDER,
    NUM_FEATURES,
};

/// What the two model outputs mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Variant {
    /// Outputs are the child's voltage magnitude and angle directly.
    #[serde(rename = "absolute")]
    Absolute,
    /// Outputs are the drop from the parent state to the child.
    #[serde(rename = "parent")]
    ParentResidual,
    /// Outputs are the deviation of the linearized baseline from the child.
    #[serde(rename = "ldf")]
    PhysicsResidual,
}

impl Variant {
    /// Wire name used in files and on the command line.
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Absolute => "absolute",
            Variant::ParentResidual => "parent",
            Variant::PhysicsResidual => "ldf",
        }
    }

    pub const ALL: [Variant; 3] = [
        Variant::Absolute,
        Variant::ParentResidual,
        Variant::PhysicsResidual,
    ];
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" => Ok(Variant::Absolute),
            "parent" => Ok(Variant::ParentResidual),
            "ldf" => Ok(Variant::PhysicsResidual),
            other => Err(Error::BadConfig(format!(
                "unknown variant '{other}' (expected absolute, parent, or ldf)"
            ))),
        }
    }
}

/// Builds the two-component training target for one edge.
/// States are `(magnitude, angle-degrees)` pairs.
pub fn make_target(
    variant: Variant,
    truth_child: (f64, f64),
    parent_state: (f64, f64),
    ldf: (f64, f64),
) -> [f64; 2] {
    match variant {
        Variant::Absolute => [truth_child.0, truth_child.1],
        Variant::ParentResidual => [
            parent_state.0 - truth_child.0,
            parent_state.1 - truth_child.1,
        ],
        Variant::PhysicsResidual => [ldf.0 - truth_child.0, ldf.1 - truth_child.1],
    }
}

/// Inverts [`make_target`]: recovers the child state from a prediction.
pub fn reconstruct(
    variant: Variant,
    prediction: [f64; 2],
    parent_state: (f64, f64),
    ldf: (f64, f64),
) -> (f64, f64) {
    match variant {
        Variant::Absolute => (prediction[0], prediction[1]),
        Variant::ParentResidual => (
            parent_state.0 - prediction[0],
            parent_state.1 - prediction[1],
        ),
        Variant::PhysicsResidual => (ldf.0 - prediction[0], ldf.1 - prediction[1]),
    }
}

/// Where inference takes the linearized-baseline features from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LdfAnchor {
    /// Step the linearization off the predicted parent state — the
    /// autoregressive default, matching how training anchors steps off
    /// the (there: ground-truth) parent.
    #[default]
    PredictedParent,
    /// Use the standalone linearized solution chained from the slack,
    /// ignoring predictions. Ablation switch: isolates how much the
    /// predictor gains from autoregressive anchoring.
    SlackChain,
}

impl std::str::FromStr for LdfAnchor {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "predicted-parent" => Ok(LdfAnchor::PredictedParent),
            "slack-chain" => Ok(LdfAnchor::SlackChain),
            other => Err(Error::BadConfig(format!(
                "unknown anchor '{other}' (expected predicted-parent or slack-chain)"
            ))),
        }
    }
}

/// Inference options.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct InferOptions {
    pub ldf_anchor: LdfAnchor,
}

/// A trained edge predictor: grid-independent, reusable across topologies.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPredictor {
    pub variant: Variant,
    pub model: GbtModel,
}

impl TrainedPredictor {
    /// Wraps a model, enforcing the 10-feature / 2-output contract.
    pub fn new(variant: Variant, model: GbtModel) -> Result<Self> {
        if model.feature_dim != NUM_FEATURES {
            return Err(Error::DimensionMismatch {
                what: "predictor feature_dim",
                expected: NUM_FEATURES,
                got: model.feature_dim,
            });
        }
        if model.output_dim != 2 {
            return Err(Error::DimensionMismatch {
                what: "predictor output_dim",
                expected: 2,
                got: model.output_dim,
            });
        }
        Ok(TrainedPredictor { variant, model })
    }

    /// Autoregressive inference over one scenario (see [`infer_with`]).
    pub fn infer(
        &self,
        ori: &Orientation,
        scenario: &Scenario,
        opts: &InferOptions,
    ) -> VoltageState {
        infer_with(ori, scenario, self.variant, opts, |features| {
            let out = self
                .model
                .predict_row(features)
                .expect("predictor dimensions are enforced at construction");
            (out[0], out[1])
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let doc = PredictorDoc {
            variant: self.variant,
            feature_order: FEATURE_ORDER.iter().map(|s| s.to_string()).collect(),
            model: self.model.clone(),
        };
        let mut file = BufWriter::new(File::create(path)?);
        let text = serde_json::to_string_pretty(&doc).expect("predictor serialization cannot fail");
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: PredictorDoc = serde_json::from_str(&text)
            .map_err(|e| Error::SchemaError(format!("predictor file: {e}")))?;
        if doc.feature_order != FEATURE_ORDER {
            return Err(Error::SchemaError(format!(
                "predictor feature_order {:?} does not match this crate's layout",
                doc.feature_order
            )));
        }
        doc.model.validate()?;
        TrainedPredictor::new(doc.variant, doc.model)
    }
}

#[derive(Serialize, Deserialize)]
struct PredictorDoc {
    variant: Variant,
    feature_order: Vec<String>,
    model: GbtModel,
}

/// One network's worth of labeled data for pooled training.
#[derive(Debug, Clone, Copy)]
pub struct NetworkData<'a> {
    pub ori: &'a Orientation,
    pub samples: &'a [LabeledSample],
}

/// Extracts teacher-forced edge rows from every (network, sample) pair and
/// stacks them into feature/target matrices, in network order then sample
/// order then BFS order.
pub fn assemble_training_set(
    networks: &[NetworkData<'_>],
    variant: Variant,
) -> Result<(DenseMatrix, DenseMatrix)> {
    let mut features: Vec<[f64; NUM_FEATURES]> = Vec::new();
    let mut targets: Vec<[f64; 2]> = Vec::new();
    for net in networks {
        for sample in net.samples {
            let agg = aggregate_downstream(net.ori, &sample.scenario);
            let ldf = lindistflow_teacher_forced(net.ori, &sample.scenario, &sample.truth);
            let rows = extract_edge_samples(
                net.ori,
                &sample.scenario,
                &sample.truth,
                variant,
                &agg,
                &ldf,
            )?;
            for row in rows {
                features.push(row.features);
                targets.push(row.target);
            }
        }
    }
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok((
        DenseMatrix::from_fixed(&features),
        DenseMatrix::from_fixed(&targets),
    ))
}

/// Trains a predictor on pooled edge rows. Deterministic given the seed in
/// `params`.
pub fn train(
    networks: &[NetworkData<'_>],
    variant: Variant,
    params: &GbtParams,
) -> Result<TrainedPredictor> {
    train_with_eval(networks, variant, params, None).map(|(p, _)| p)
}

/// Trains a predictor; when `eval` networks are given, also returns the
/// pooled target-space RMSE on their edge rows after every boosting round.
pub fn train_with_eval(
    networks: &[NetworkData<'_>],
    variant: Variant,
    params: &GbtParams,
    eval: Option<&[NetworkData<'_>]>,
) -> Result<(TrainedPredictor, Vec<f64>)> {
    let (x, y) = assemble_training_set(networks, variant)?;
    let eval_set = match eval {
        Some(nets) => Some(assemble_training_set(nets, variant)?),
        None => None,
    };
    let (model, curve) = match &eval_set {
        Some((ex, ey)) => fit_with_eval(&x, &y, params, Some((ex, ey)))?,
        None => fit_with_eval(&x, &y, params, None)?,
    };
    Ok((TrainedPredictor::new(variant, model)?, curve))
}

/// Autoregressive BFS inference with an arbitrary edge-level predictor.
///
/// Walks the tree from the slack in BFS order; for each child, builds the
/// feature row from the *predicted* parent state, anchors the linearized
/// baseline per `opts.ldf_anchor`, calls `predict` exactly once (N-1 calls
/// total), and reconstructs the child state per the variant. Slack entries
/// are fixed to the scenario values.
pub fn infer_with<F>(
    ori: &Orientation,
    scenario: &Scenario,
    variant: Variant,
    opts: &InferOptions,
    predict: F,
) -> VoltageState
where
    F: FnMut(&[f64; NUM_FEATURES]) -> (f64, f64),
{
    infer_in_order(ori, &ori.bfs_order, scenario, variant, opts, predict)
}

/// Same as [`infer_with`] over a caller-chosen processing order, which
/// must place every parent before its children. Results are identical for
/// every such order because each bus depends only on its own parent.
fn infer_in_order<F>(
    ori: &Orientation,
    order: &[usize],
    scenario: &Scenario,
    variant: Variant,
    opts: &InferOptions,
    mut predict: F,
) -> VoltageState
where
    F: FnMut(&[f64; NUM_FEATURES]) -> (f64, f64),
{
    let n = ori.n_buses();
    let agg = aggregate_downstream(ori, scenario);
    let slack_chain = match opts.ldf_anchor {
        LdfAnchor::SlackChain => Some(lindistflow_solve(ori, scenario)),
        LdfAnchor::PredictedParent => None,
    };

    let mut state = VoltageState::flat(n, scenario.slack_vm, scenario.slack_va);
    for &j in order {
        let Some(i) = ori.parent[j] else { continue };
        let (ldf_vm, ldf_va) = match &slack_chain {
            None => lindistflow_step(&LdfStepInput {
                v_parent: state.vm[i],
                theta_parent: state.va[i],
                r: ori.edge_r[j],
                x: ori.edge_x[j],
                p_agg: agg.p_agg[j],
                q_agg: agg.q_agg[j],
                v0: scenario.slack_vm,
            }),
            Some(chain) => (chain.vm[j], chain.va[j]),
        };
        let features = feature_row(
            state.vm[i],
            state.va[i],
            ori.edge_r[j],
            ori.edge_x[j],
            scenario.p_inj[j],
            scenario.q_inj[j],
            agg.p_agg[j],
            agg.q_agg[j],
            ldf_vm,
            ldf_va,
        );
        let raw = predict(&features);
        let (vm, va) = reconstruct(variant, [raw.0, raw.1], (state.vm[i], state.va[i]), (ldf_vm, ldf_va));
        state.vm[j] = vm;
        state.va[j] = va;
    }
    state
}
