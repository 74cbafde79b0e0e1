//! Joint graph/node random distillation: training and anomaly scoring.
//!
//! A target GCN is drawn at random and frozen. A predictor GCN of the same
//! shape is trained on normal graphs to reproduce the target's node
//! representations and its max-pooled graph representation. For one graph
//! with `N` nodes the two prediction errors are
//!
//! ```text
//! graph_err = ‖h_G − ĥ_G‖²
//! node_err  = (1/N) Σ_i ‖h_i − ĥ_i‖²
//! ```
//!
//! Training minimizes the batch mean of `graph_err + λ·node_err`; the anomaly
//! score of a graph is `graph_err + node_err`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::adam::{adam_step, AdamState};
use crate::dataset::{FeatureKind, GraphDataset};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::gcn::{
    gcn_backward, gcn_forward, init_params, ForwardCache, GcnArch, GcnParams, DEFAULT_LAYER_DIMS,
};
use crate::graph::{degree_features, normalized_adjacency, Graph, NormAdj};
use crate::matrix::{squared_distance, Matrix};
use crate::rng::SeedRng;

/// Graphs per gradient job. Fixed so the reduction order never depends on
/// how many workers the executor has.
const GRAD_CHUNK: usize = 8;

/// Which distillation terms enter the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LossTerms {
    /// `L_graph + λ·L_node`.
    Joint,
    /// `L_graph` only (the "without node loss" ablation).
    GraphOnly,
    /// `L_node` only (the "without graph loss" ablation).
    NodeOnly,
}

impl LossTerms {
    /// `(graph weight, node weight)` in the objective.
    pub fn weights(self, lambda: f64) -> (f64, f64) {
        match self {
            LossTerms::Joint => (1.0, lambda),
            LossTerms::GraphOnly => (1.0, 0.0),
            LossTerms::NodeOnly => (0.0, 1.0),
        }
    }

    /// The score terms matching this training objective.
    pub fn score_flags(self) -> (bool, bool) {
        match self {
            LossTerms::Joint => (true, true),
            LossTerms::GraphOnly => (true, false),
            LossTerms::NodeOnly => (false, true),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LossTerms::Joint => "joint",
            LossTerms::GraphOnly => "graph-only",
            LossTerms::NodeOnly => "node-only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "joint" => Some(LossTerms::Joint),
            "graph-only" => Some(LossTerms::GraphOnly),
            "node-only" => Some(LossTerms::NodeOnly),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub lambda: f64,
    pub seed_target: u64,
    pub seed_predictor: u64,
    pub seed_shuffle: u64,
    /// Output width of each GCN layer; the input width comes from the data.
    pub layer_dims: Vec<usize>,
    pub loss_terms: LossTerms,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            batch_size: 300,
            epochs: 150,
            lambda: 1.0,
            seed_target: 0,
            seed_predictor: 1,
            seed_shuffle: 2,
            layer_dims: DEFAULT_LAYER_DIMS.to_vec(),
            loss_terms: LossTerms::Joint,
        }
    }
}

impl TrainConfig {
    /// Every violated constraint, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            out.push(alloc::format!("lr must be positive and finite (got {})", self.lr));
        }
        if self.batch_size == 0 {
            out.push("batch_size must be >= 1".into());
        }
        if self.epochs == 0 {
            out.push("epochs must be >= 1".into());
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            out.push(alloc::format!("lambda must be >= 0 (got {})", self.lambda));
        }
        if self.layer_dims.is_empty() || self.layer_dims.contains(&0) {
            out.push(alloc::format!(
                "layer_dims must be nonempty and positive (got {:?})",
                self.layer_dims
            ));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v))
        }
    }
}

/// How a model turns a graph into its input matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub kind: FeatureKind,
    pub input_dim: usize,
    /// Last one-hot bucket for degree features.
    pub max_degree: Option<usize>,
}

impl FeatureSpec {
    /// Fixes the input width from the training graphs. For plain graphs the
    /// one-hot width is one past the largest training degree.
    pub fn for_training(ds: &GraphDataset) -> Result<Self> {
        match ds.feature_kind() {
            FeatureKind::Attributed => {
                let input_dim = ds.feature_dim().ok_or(Error::EmptyTrainingSet)?;
                Ok(Self {
                    kind: FeatureKind::Attributed,
                    input_dim,
                    max_degree: None,
                })
            }
            FeatureKind::DegreeOneHot => {
                let max_degree = ds.graphs().iter().map(Graph::max_degree).max().unwrap_or(0);
                Ok(Self::degree(max_degree))
            }
        }
    }

    pub fn degree(max_degree: usize) -> Self {
        Self {
            kind: FeatureKind::DegreeOneHot,
            input_dim: max_degree + 1,
            max_degree: Some(max_degree),
        }
    }

    pub fn featurize(&self, g: &Graph) -> Result<Matrix> {
        match self.kind {
            FeatureKind::Attributed => {
                let x = g.features().ok_or(Error::FeatureDimMismatch {
                    expected: self.input_dim,
                    found: 0,
                })?;
                if x.cols() != self.input_dim {
                    return Err(Error::FeatureDimMismatch {
                        expected: self.input_dim,
                        found: x.cols(),
                    });
                }
                Ok(x.clone())
            }
            FeatureKind::DegreeOneHot => {
                Ok(degree_features(g, self.max_degree.unwrap_or(self.input_dim - 1)))
            }
        }
    }

    pub fn prepare(&self, g: &Graph) -> Result<PreparedGraph> {
        Ok(PreparedGraph {
            adj: normalized_adjacency(g),
            x: self.featurize(g)?,
        })
    }
}

/// Normalized adjacency plus featurized input, ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGraph {
    pub adj: NormAdj,
    pub x: Matrix,
}

/// Frozen target, trained predictor, and what is needed to featurize new graphs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistillModel {
    arch: GcnArch,
    target: GcnParams,
    predictor: GcnParams,
    features: FeatureSpec,
    lambda: f64,
    loss_terms: LossTerms,
    seed_target: u64,
    seed_predictor: u64,
}

impl DistillModel {
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        arch: GcnArch,
        target: GcnParams,
        predictor: GcnParams,
        features: FeatureSpec,
        lambda: f64,
        loss_terms: LossTerms,
        seed_target: u64,
        seed_predictor: u64,
    ) -> Result<Self> {
        let reference = GcnParams::zeros(&arch);
        if !target.same_shape(&reference) || !predictor.same_shape(&reference) {
            return Err(Error::ShapeMismatch(
                "target and predictor must match the architecture".into(),
            ));
        }
        if features.input_dim != arch.input_dim {
            return Err(Error::FeatureDimMismatch {
                expected: arch.input_dim,
                found: features.input_dim,
            });
        }
        Ok(Self {
            arch,
            target,
            predictor,
            features,
            lambda,
            loss_terms,
            seed_target,
            seed_predictor,
        })
    }

    pub fn arch(&self) -> &GcnArch {
        &self.arch
    }

    pub fn target(&self) -> &GcnParams {
        &self.target
    }

    pub fn predictor(&self) -> &GcnParams {
        &self.predictor
    }

    pub fn features(&self) -> &FeatureSpec {
        &self.features
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn loss_terms(&self) -> LossTerms {
        self.loss_terms
    }

    pub fn seed_target(&self) -> u64 {
        self.seed_target
    }

    pub fn seed_predictor(&self) -> u64 {
        self.seed_predictor
    }

    /// Copy with a different predictor of the same shape.
    pub fn with_predictor(&self, predictor: GcnParams) -> Result<Self> {
        Self::from_parts(
            self.arch.clone(),
            self.target.clone(),
            predictor,
            self.features,
            self.lambda,
            self.loss_terms,
            self.seed_target,
            self.seed_predictor,
        )
    }

    pub fn prepare(&self, g: &Graph) -> Result<PreparedGraph> {
        self.features.prepare(g)
    }

    /// `(graph_err, node_err)` for one prepared graph.
    pub fn prediction_errors(&self, g: &PreparedGraph) -> Result<(f64, f64)> {
        let target = gcn_forward(&self.target, &g.adj, &g.x)?;
        let predicted = gcn_forward(&self.predictor, &g.adj, &g.x)?;
        Ok(errors(&predicted, target.node_repr(), target.graph_repr()))
    }

    pub fn score_prepared(&self, g: &PreparedGraph, use_graph: bool, use_node: bool) -> Result<f64> {
        if !use_graph && !use_node {
            return Err(Error::NoTermEnabled);
        }
        let (ge, ne) = self.prediction_errors(g)?;
        Ok(if use_graph { ge } else { 0.0 } + if use_node { ne } else { 0.0 })
    }
}

fn errors(predicted: &ForwardCache, target_nodes: &Matrix, target_graph: &[f64]) -> (f64, f64) {
    let graph_err = squared_distance(predicted.graph_repr(), target_graph);
    let n = target_nodes.rows() as f64;
    let node_err = squared_distance(predicted.node_repr().as_slice(), target_nodes.as_slice()) / n;
    (graph_err, node_err)
}

/// Anomaly score: `‖h_G − ĥ_G‖² + (1/N) Σ_i ‖h_i − ĥ_i‖²`.
pub fn score(model: &DistillModel, g: &Graph) -> Result<f64> {
    score_variant(model, g, true, true)
}

/// Only the enabled terms of the anomaly score.
pub fn score_variant(model: &DistillModel, g: &Graph, use_graph: bool, use_node: bool) -> Result<f64> {
    if !use_graph && !use_node {
        return Err(Error::NoTermEnabled);
    }
    model.score_prepared(&model.prepare(g)?, use_graph, use_node)
}

/// Batch means `(L_graph, L_node)` of the two prediction errors.
pub fn batch_losses(model: &DistillModel, graphs: &[Graph]) -> Result<(f64, f64)> {
    if graphs.is_empty() {
        return Ok((0.0, 0.0));
    }
    let mut sum = (0.0, 0.0);
    for g in graphs {
        let (ge, ne) = model.prediction_errors(&model.prepare(g)?)?;
        sum.0 += ge;
        sum.1 += ne;
    }
    let b = graphs.len() as f64;
    Ok((sum.0 / b, sum.1 / b))
}

/// Per-epoch means over every training graph, measured at the time of its step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochLoss {
    pub epoch: usize,
    pub objective: f64,
    pub graph: f64,
    pub node: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: DistillModel,
    pub trace: Vec<EpochLoss>,
    /// Optimizer steps taken.
    pub steps: u64,
}

struct TargetOutput {
    nodes: Matrix,
    graph: Vec<f64>,
}

struct ChunkResult {
    grads: GcnParams,
    graph_err: f64,
    node_err: f64,
}

/// Trains the predictor on every graph of `train_set` (labels are not read).
///
/// Each epoch shuffles the training order with the `seed_shuffle` stream and
/// walks it in contiguous batches, the last one possibly short. One Adam step
/// per batch on the predictor; the target is never touched.
pub fn train<E: Executor>(train_set: &GraphDataset, cfg: &TrainConfig, exec: &E) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let features = FeatureSpec::for_training(train_set)?;
    let arch = GcnArch::new(features.input_dim, cfg.layer_dims.clone())?;
    let target = init_params(&arch, cfg.seed_target);
    let mut predictor = init_params(&arch, cfg.seed_predictor);
    let (w_graph, w_node) = cfg.loss_terms.weights(cfg.lambda);

    let graphs = train_set.graphs();
    let prepared: Vec<PreparedGraph> = exec
        .map(graphs.len(), |i| features.prepare(&graphs[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    // The target is frozen, so its outputs are computed once.
    let targets: Vec<TargetOutput> = exec
        .map(prepared.len(), |i| {
            gcn_forward(&target, &prepared[i].adj, &prepared[i].x).map(|c| TargetOutput {
                nodes: c.node_repr().clone(),
                graph: c.graph_repr().to_vec(),
            })
        })
        .into_iter()
        .collect::<Result<_>>()?;

    let mut adam = AdamState::new(&arch);
    let mut shuffler = SeedRng::new(cfg.seed_shuffle);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    let m = prepared.len() as f64;

    for epoch in 0..cfg.epochs {
        shuffler.shuffle(&mut order);
        let (mut epoch_graph, mut epoch_node) = (0.0, 0.0);
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let scale = 1.0 / batch.len() as f64;
            let chunks = exec.map(batch.len().div_ceil(GRAD_CHUNK), |c| {
                let ids = &batch[c * GRAD_CHUNK..((c + 1) * GRAD_CHUNK).min(batch.len())];
                chunk_gradient(&predictor, &arch, &prepared, &targets, ids, scale, w_graph, w_node)
            });
            let mut grads = GcnParams::zeros(&arch);
            for chunk in chunks {
                let chunk = chunk?;
                grads.add_scaled(1.0, &chunk.grads);
                epoch_graph += chunk.graph_err;
                epoch_node += chunk.node_err;
            }
            if !(epoch_graph.is_finite() && epoch_node.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch, step });
            }
            adam_step(&mut adam, &mut predictor, &grads, cfg.lr).map_err(|e| match e {
                Error::NonFiniteGradient { .. } => Error::NonFiniteLoss { epoch, step },
                other => other,
            })?;
        }
        let graph = epoch_graph / m;
        let node = epoch_node / m;
        trace.push(EpochLoss {
            epoch,
            objective: w_graph * graph + w_node * node,
            graph,
            node,
        });
    }

    let model = DistillModel::from_parts(
        arch,
        target,
        predictor,
        features,
        cfg.lambda,
        cfg.loss_terms,
        cfg.seed_target,
        cfg.seed_predictor,
    )?;
    Ok(TrainOutcome {
        model,
        trace,
        steps: adam.t,
    })
}

/// Summed gradient of `scale · Σ (w_graph·graph_err + w_node·node_err)` over `ids`.
#[allow(clippy::too_many_arguments)]
fn chunk_gradient(
    predictor: &GcnParams,
    arch: &GcnArch,
    prepared: &[PreparedGraph],
    targets: &[TargetOutput],
    ids: &[usize],
    scale: f64,
    w_graph: f64,
    w_node: f64,
) -> Result<ChunkResult> {
    let mut out = ChunkResult {
        grads: GcnParams::zeros(arch),
        graph_err: 0.0,
        node_err: 0.0,
    };
    for &i in ids {
        let g = &prepared[i];
        let t = &targets[i];
        let cache = gcn_forward(predictor, &g.adj, &g.x)?;
        let (ge, ne) = errors(&cache, &t.nodes, &t.graph);
        out.graph_err += ge;
        out.node_err += ne;

        let cg = 2.0 * w_graph * scale;
        let grad_graph: Vec<f64> = cache
            .graph_repr()
            .iter()
            .zip(&t.graph)
            .map(|(h, ht)| cg * (h - ht))
            .collect();
        let cn = 2.0 * w_node * scale / t.nodes.rows() as f64;
        let mut grad_nodes = cache.node_repr().clone();
        grad_nodes.add_scaled(-1.0, &t.nodes);
        for v in grad_nodes.as_mut_slice() {
            *v *= cn;
        }
        let grads = gcn_backward(predictor, &g.adj, &cache, &grad_graph, &grad_nodes)?;
        out.grads.add_scaled(1.0, &grads);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::gcn::Layer;
    use alloc::vec;

    fn tiny_dataset() -> GraphDataset {
        let graphs = vec![
            Graph::new(3, [(0, 1), (1, 2)], None).unwrap(),
            Graph::new(4, [(0, 1), (0, 2), (0, 3)], None).unwrap(),
            Graph::new(2, [(0, 1)], None).unwrap(),
            Graph::new(5, [(0, 1), (1, 2), (2, 3), (3, 4)], None).unwrap(),
        ];
        GraphDataset::new("tiny", FeatureKind::DegreeOneHot, graphs, vec![0; 4]).unwrap()
    }

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            lr: 1e-2,
            batch_size: 2,
            epochs: 3,
            layer_dims: vec![6, 4],
            ..TrainConfig::default()
        }
    }

    #[test]
    fn defaults() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr, 1e-4);
        assert_eq!(cfg.batch_size, 300);
        assert_eq!(cfg.epochs, 150);
        assert_eq!(cfg.lambda, 1.0);
        assert_eq!(cfg.layer_dims, vec![512, 512, 256]);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn config_lists_every_violation() {
        let cfg = TrainConfig {
            lr: -1.0,
            epochs: 0,
            batch_size: 0,
            lambda: -0.5,
            ..TrainConfig::default()
        };
        match cfg.validate() {
            Err(Error::InvalidConfig(v)) => assert_eq!(v.len(), 4, "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_networks_have_zero_loss() {
        let ds = tiny_dataset();
        let model = train(&ds, &small_cfg(), &Sequential).unwrap().model;
        let same = model.with_predictor(model.target().clone()).unwrap();
        assert_eq!(batch_losses(&same, ds.graphs()).unwrap(), (0.0, 0.0));
        for g in ds.graphs() {
            assert_eq!(score(&same, g).unwrap(), 0.0);
            assert_eq!(score_variant(&same, g, true, false).unwrap(), 0.0);
        }
    }

    #[test]
    fn hand_set_one_dim_outputs() {
        // One node, one 1x1 layer, x = 1: target outputs 1, predictor outputs 3.
        let arch = GcnArch::new(1, vec![1]).unwrap();
        let layer = |w: f64| GcnParams {
            layers: vec![Layer {
                weight: Matrix::from_vec(1, 1, vec![w]),
                bias: vec![0.0],
            }],
        };
        let spec = FeatureSpec {
            kind: FeatureKind::Attributed,
            input_dim: 1,
            max_degree: None,
        };
        let model =
            DistillModel::from_parts(arch, layer(1.0), layer(3.0), spec, 1.0, LossTerms::Joint, 0, 0)
                .unwrap();
        let g = Graph::new(1, [], Some(Matrix::from_vec(1, 1, vec![1.0]))).unwrap();
        assert_eq!(batch_losses(&model, &[g.clone()]).unwrap(), (4.0, 4.0));
        assert_eq!(score(&model, &g).unwrap(), 8.0);
        assert_eq!(score_variant(&model, &g, false, true).unwrap(), 4.0);
        assert_eq!(score_variant(&model, &g, false, false), Err(Error::NoTermEnabled));
    }

    #[test]
    fn loop_accounting() {
        let ds = tiny_dataset();
        let zero = TrainConfig {
            epochs: 0,
            ..small_cfg()
        };
        assert!(matches!(train(&ds, &zero, &Sequential), Err(Error::InvalidConfig(_))));
        let one = TrainConfig {
            epochs: 1,
            batch_size: 10,
            ..small_cfg()
        };
        let out = train(&ds, &one, &Sequential).unwrap();
        assert_eq!(out.steps, 1);
        assert_eq!(out.trace.len(), 1);
        // ⌈4 / 3⌉ = 2 steps per epoch, last batch kept.
        let partial = TrainConfig {
            epochs: 5,
            batch_size: 3,
            ..small_cfg()
        };
        assert_eq!(train(&ds, &partial, &Sequential).unwrap().steps, 10);
    }

    #[test]
    fn training_is_deterministic_and_leaves_target_frozen() {
        let ds = tiny_dataset();
        let a = train(&ds, &small_cfg(), &Sequential).unwrap();
        let b = train(&ds, &small_cfg(), &Sequential).unwrap();
        assert_eq!(a, b);
        let fresh = init_params(a.model.arch(), small_cfg().seed_target);
        assert_eq!(a.model.target(), &fresh);
        assert_ne!(
            a.model.predictor(),
            &init_params(a.model.arch(), small_cfg().seed_predictor)
        );
    }

    #[test]
    fn empty_training_set_rejected() {
        let ds = GraphDataset::new("e", FeatureKind::DegreeOneHot, vec![], vec![]).unwrap();
        assert_eq!(
            train(&ds, &small_cfg(), &Sequential).unwrap_err(),
            Error::EmptyTrainingSet
        );
    }

    #[test]
    fn lambda_zero_objective_is_graph_loss() {
        let ds = tiny_dataset();
        let cfg = TrainConfig {
            lambda: 0.0,
            ..small_cfg()
        };
        for row in train(&ds, &cfg, &Sequential).unwrap().trace {
            assert_eq!(row.objective, row.graph);
            assert!(row.node >= 0.0 && row.node.is_finite());
        }
    }

    #[test]
    fn node_share_grows_with_lambda() {
        let ds = tiny_dataset();
        let model = train(
            &ds,
            &TrainConfig {
                epochs: 1,
                ..small_cfg()
            },
            &Sequential,
        )
        .unwrap()
        .model;
        let (lg, ln) = batch_losses(&model, ds.graphs()).unwrap();
        let mut last = -1.0;
        for lambda in [0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let share = lambda * ln / (lg + lambda * ln);
            assert!(share >= last);
            last = share;
        }
    }

    #[test]
    fn unseen_feature_width_rejected() {
        let spec = FeatureSpec {
            kind: FeatureKind::Attributed,
            input_dim: 3,
            max_degree: None,
        };
        let g = Graph::new(2, [(0, 1)], Some(Matrix::zeros(2, 4))).unwrap();
        assert_eq!(
            spec.prepare(&g).unwrap_err(),
            Error::FeatureDimMismatch {
                expected: 3,
                found: 4
            }
        );
        let plain = Graph::new(2, [(0, 1)], None).unwrap();
        assert!(spec.prepare(&plain).is_err());
    }

    #[test]
    fn degree_features_clamp_for_unseen_graphs() {
        let spec = FeatureSpec::degree(2);
        let star = Graph::new(5, [(0, 1), (0, 2), (0, 3), (0, 4)], None).unwrap();
        let x = spec.featurize(&star).unwrap();
        assert_eq!(x.cols(), 3);
        assert_eq!(x.row(0), &[0.0, 0.0, 1.0]);
    }
}
