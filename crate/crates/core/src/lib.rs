//! Power-flow toolkit for radial distribution grids.
//!
//! The crate models tree-shaped low-voltage networks and solves them three
//! ways — a linearized branch-flow pass, a nonlinear branch-flow fixed
//! point, and an exact forward-backward AC sweep used as the labeling
//! oracle — then layers a from-scratch gradient-boosted-tree predictor on
//! top that walks the tree edge by edge, predicting each bus voltage from
//! its parent's state. Supporting modules generate synthetic grids and
//! stochastic injection scenarios, and benchmark accuracy and inference
//! scaling.

pub mod analytical;
pub mod datagen;
pub mod error;
pub mod eval;
pub mod gbt;
pub mod grid;
pub mod path;
pub mod sequential;

pub use analytical::{
    ac_oracle_solve, distflow_residual, distflow_solve, lindistflow_solve, lindistflow_step,
    lindistflow_teacher_forced, LdfStepInput, SolverOptions,
};
pub use datagen::{
    build_dataset, der_placement, gen_grid, gen_scenario, DatasetOptions, DerPlacement,
    GridGenConfig, ScenarioGenConfig,
};
pub use error::{Error, Result};
pub use eval::{
    evaluate, linear_fit, per_hop_csv, per_hop_profile, rmse, scaling_csv, scaling_study,
    ConstantTimeControl, EvalReport, HookEvent, HopRmse, InferenceSubject, LinearFit,
    ScalingConfig, ScalingPoint, ScalingReport,
};
pub use gbt::{
    fit, fit_with_eval, DenseMatrix, GbtModel, GbtParams, MultiStrategy, Tree, TreeNode,
    GBT_FORMAT_VERSION,
};
pub use grid::{
    grid_hash, load_dataset, load_grid, load_scenario, max_pq_mismatch, power_mismatch,
    save_dataset, save_grid, save_scenario, save_state, validate_dataset, validate_grid,
    validate_scenario, validate_state, Branch, Bus, BusKind, LabeledSample, RadialGrid, Scenario,
    VoltageState,
};
pub use path::{
    aggregate_downstream, decompose_paths, extract_edge_samples, orient, Aggregates, BatchMeta,
    EdgeSample, Orientation, SampleBatch, FEATURE_ORDER, NUM_FEATURES,
};
pub use sequential::{
    assemble_training_set, infer_with, make_target, reconstruct, train, train_with_eval,
    InferOptions, LdfAnchor, NetworkData, TrainedPredictor, Variant,
};
