use std::fmt;

use crate::grid::VoltageState;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by grid validation, solvers, training, and file formats.
#[derive(Debug)]
pub enum Error {
    /// Branch graph has a cycle, is disconnected, or the wrong edge count.
    NotATree(String),
    /// No bus of kind slack, or `slack_id` does not reference one.
    NoSlack,
    /// More than one bus is marked slack.
    MultipleSlack { count: usize },
    /// A branch references a missing bus or connects a bus to itself.
    DanglingBranch { from_bus: usize, to_bus: usize },
    /// Array lengths or feature dimensions disagree.
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    /// Ground-truth voltage arrays do not cover every bus.
    MissingTruth { expected: usize, got: usize },
    /// Iteration budget exhausted. Carries the last iterate and its residual.
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<VoltageState>,
    },
    /// No training rows (or too few to fit anything).
    EmptyDataset,
    /// A metric was requested over an empty pool.
    EmptyInput,
    /// A document failed structural validation.
    SchemaError(String),
    /// A document carries an unsupported format version.
    VersionMismatch { expected: u32, got: u32 },
    /// A configuration value violates its documented range.
    BadConfig(String),
    /// A dataset sample failed to label after exhausting the retry budget.
    LabelingFailed { sample: usize, attempts: usize },
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotATree(why) => write!(f, "branch graph is not a tree: {why}"),
            Error::NoSlack => write!(f, "grid has no slack bus"),
            Error::MultipleSlack { count } => {
                write!(f, "grid has {count} slack buses, expected exactly one")
            }
            Error::DanglingBranch { from_bus, to_bus } => {
                write!(f, "branch {from_bus}->{to_bus} references invalid buses")
            }
            Error::DimensionMismatch {
                what,
                expected,
                got,
            } => write!(f, "dimension mismatch in {what}: expected {expected}, got {got}"),
            Error::MissingTruth { expected, got } => {
                write!(f, "ground truth covers {got} buses, expected {expected}")
            }
            Error::NonConvergence {
                iterations,
                residual,
                ..
            } => write!(
                f,
                "solver did not converge after {iterations} iterations (residual {residual:.3e})"
            ),
            Error::EmptyDataset => write!(f, "dataset holds no usable training rows"),
            Error::EmptyInput => write!(f, "empty input: nothing to evaluate"),
            Error::SchemaError(why) => write!(f, "invalid document: {why}"),
            Error::VersionMismatch { expected, got } => {
                write!(f, "unsupported format version {got}, expected {expected}")
            }
            Error::BadConfig(why) => write!(f, "bad configuration: {why}"),
            Error::LabelingFailed { sample, attempts } => write!(
                f,
                "sample {sample} failed to label after {attempts} attempts"
            ),
            Error::Io(err) => write!(f, "i/o error: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

impl Error {
    /// Stable machine-readable tag, used by the CLI error records.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NotATree(_) => "not_a_tree",
            Error::NoSlack => "no_slack",
            Error::MultipleSlack { .. } => "multiple_slack",
            Error::DanglingBranch { .. } => "dangling_branch",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::MissingTruth { .. } => "missing_truth",
            Error::NonConvergence { .. } => "non_convergence",
            Error::EmptyDataset => "empty_dataset",
            Error::EmptyInput => "empty_input",
            Error::SchemaError(_) => "schema_error",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::BadConfig(_) => "bad_config",
            Error::LabelingFailed { .. } => "labeling_failed",
            Error::Io(_) => "io",
        }
    }
}
