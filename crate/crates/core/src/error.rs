use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("graph must have at least one node")]
    EmptyGraph,
    #[error("edge ({0}, {1}) has an endpoint outside [0, {2})")]
    OutOfRangeEndpoint(usize, usize, usize),
    #[error("self-loop on node {0} rejected")]
    SelfLoopRejected(usize),
    #[error("feature matrix has shape {rows}x{cols}, expected {expected_rows} rows with at least one column")]
    FeatureShapeMismatch {
        rows: usize,
        cols: usize,
        expected_rows: usize,
    },

    #[error("{labels} labels for {graphs} graphs")]
    LabelLengthMismatch { graphs: usize, labels: usize },
    #[error("dataset contains no normal graph")]
    NoNormalGraph,
    #[error("feature dimension {found} does not match expected {expected}")]
    FeatureDimMismatch { expected: usize, found: usize },
    #[error("feature kind of graph {0} does not match the dataset")]
    FeatureKindMismatch(usize),
    #[error("class id {0} does not occur in the dataset")]
    UnknownClassId(i64),
    #[error("fold count {k} is invalid for {n} graphs")]
    FoldCountTooLarge { k: usize, n: usize },
    #[error("sampling fraction {0} is outside (0, 1]")]
    InvalidFraction(f64),
    #[error("contamination rate {0} is outside [0, 0.5]")]
    InvalidRate(f64),
    #[error("sampling produced an empty set")]
    EmptyResult,
    #[error("contamination needs {needed} anomalies but the pool has {available}")]
    PoolTooSmall { needed: usize, available: usize },
    #[error("invalid synthetic corpus spec: {0}")]
    InvalidSpec(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("forward cache does not match the parameters or cotangents")]
    CacheMismatch,
    #[error("non-finite gradient in layer {layer}")]
    NonFiniteGradient { layer: usize },
    #[error("learning rate must be positive and finite, got {0}")]
    InvalidLearningRate(f64),

    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFiniteLoss { epoch: usize, step: usize },
    #[error("invalid configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error("at least one score term must be enabled")]
    NoTermEnabled,

    #[error("AUC needs both classes present")]
    SingleClassInput,
    #[error("{scores} scores for {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("invalid grid axis value {value} for {kind}")]
    InvalidGridAxis { kind: &'static str, value: String },
}
