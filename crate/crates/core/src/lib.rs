#![no_std]
#![forbid(unsafe_code)]

//! Graph-level anomaly detection by glocal random distillation.
//!
//! A predictor GCN is trained to reproduce the node- and graph-level
//! representations of a frozen, randomly initialized target GCN on normal
//! graphs. The anomaly score of a graph is its joint prediction error.
//!
//! This crate is the pure numerical core: it needs `alloc` but not `std`.
//! File formats, the benchmark parser, parallel execution and the CLI live
//! in the `glocalkd` companion crate.

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod adam;
pub mod dataset;
pub mod distill;
pub mod error;
pub mod eval;
pub mod exec;
pub mod gcn;
pub mod graph;
pub mod matrix;
pub mod rng;
pub mod synth;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use dataset::{
    inject_contamination, stratified_kfold, subsample_training, to_anomaly_labels, FeatureKind,
    FoldPlan, GraphDataset,
};
pub use distill::{
    batch_losses, score, score_variant, train, DistillModel, EpochLoss, FeatureSpec, LossTerms,
    PreparedGraph, TrainConfig, TrainOutcome,
};
pub use error::{Error, Result};
pub use eval::{
    auc, run_cv, run_grid, run_split, AblationMode, AxisPoint, CvOptions, CvReport, ExperimentGrid,
    ExperimentKind, GridReport, GridRow, ScoreReport, ScoredGraph,
};
pub use exec::{Executor, Sequential};
pub use gcn::{gcn_backward, gcn_forward, init_params, readout_max, ForwardCache, GcnArch, GcnParams};
pub use graph::{build_graph, degree_features, normalized_adjacency, Graph, NormAdj};
pub use matrix::Matrix;
pub use rng::SeedRng;
pub use synth::{synth_corpus, SynthSpec};
