//! ROC-AUC and the cross-validated experiment suites.

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{
    inject_contamination, stratified_kfold, subsample_training, FoldPlan, GraphDataset,
};
use crate::distill::{train, LossTerms, PreparedGraph, TrainConfig};
use crate::error::{Error, Result};
use crate::exec::Executor;
use crate::graph::Graph;
use crate::rng::mix_seed;

/// Rank-based (Mann-Whitney) AUC, `true` = anomalous = should score high.
/// Tied scores count one half.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClassInput);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the positive rank sum, kept integral: a tie group covering 1-based
    // ranks lo..=hi contributes (lo + hi) per positive member.
    let mut doubled_rank_sum: u64 = 0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let positives = order[start..end].iter().filter(|&&i| labels[i]).count() as u64;
        doubled_rank_sum += positives * (start as u64 + 1 + end as u64);
        start = end;
    }
    // 2U = 2R - P(P + 1)
    let doubled_u = doubled_rank_sum - pos * (pos + 1);
    Ok(doubled_u as f64 / (2 * pos * neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredGraph {
    /// Index into the evaluated dataset.
    pub id: usize,
    pub score: f64,
    pub label: bool,
}

/// Scores of one test split with their AUC.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub fold: usize,
    pub entries: Vec<ScoredGraph>,
    pub auc: f64,
    pub n_train: usize,
    pub config: TrainConfig,
    /// Seconds spent on training and scoring; `None` without a clock.
    pub wall_time: Option<f64>,
}

impl ScoreReport {
    pub fn recompute_auc(&self) -> Result<f64> {
        let scores: Vec<f64> = self.entries.iter().map(|e| e.score).collect();
        let labels: Vec<bool> = self.entries.iter().map(|e| e.label).collect();
        auc(&scores, &labels)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    /// Keep anomalous graphs in the training folds (unsupervised setting).
    pub retain_anomalies: bool,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            retain_anomalies: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub folds: Vec<ScoreReport>,
    pub mean_auc: f64,
    pub std_auc: f64,
}

/// Mean and sample standard deviation (`n - 1`; 0 for one value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, libm::sqrt(var))
}

/// Hook that turns a fold's default training set into the one actually used.
/// Receives the fold id, the normal training graphs and the training-side
/// anomalies (never test graphs).
type TrainTransform<'a> = dyn Fn(usize, GraphDataset, Vec<Graph>) -> Result<GraphDataset> + Sync + 'a;

fn identity_transform(_: usize, ds: GraphDataset, _: Vec<Graph>) -> Result<GraphDataset> {
    Ok(ds)
}

/// Trains on `train` and scores `test` once per entry of `variants`.
fn train_and_score<E: Executor>(
    ds: &GraphDataset,
    train_set: &GraphDataset,
    test_ids: &[usize],
    cfg: &TrainConfig,
    variants: &[(bool, bool)],
    fold: usize,
    exec: &E,
) -> Result<Vec<ScoreReport>> {
    let t0 = exec.now_secs();
    let model = train(train_set, cfg, exec)?.model;
    let prepared: Vec<PreparedGraph> = exec
        .map(test_ids.len(), |i| model.prepare(&ds.graphs()[test_ids[i]]))
        .into_iter()
        .collect::<Result<_>>()?;
    let errors: Vec<(f64, f64)> = exec
        .map(prepared.len(), |i| model.prediction_errors(&prepared[i]))
        .into_iter()
        .collect::<Result<_>>()?;
    let wall_time = match (t0, exec.now_secs()) {
        (Some(a), Some(b)) => Some(b - a),
        _ => None,
    };
    variants
        .iter()
        .map(|&(use_graph, use_node)| {
            if !use_graph && !use_node {
                return Err(Error::NoTermEnabled);
            }
            let entries: Vec<ScoredGraph> = test_ids
                .iter()
                .zip(&errors)
                .map(|(&id, &(ge, ne))| ScoredGraph {
                    id,
                    score: if use_graph { ge } else { 0.0 } + if use_node { ne } else { 0.0 },
                    label: ds.labels()[id],
                })
                .collect();
            if entries.iter().any(|e| !e.score.is_finite()) {
                return Err(Error::NonFiniteLoss { epoch: cfg.epochs, step: 0 });
            }
            let scores: Vec<f64> = entries.iter().map(|e| e.score).collect();
            let labels: Vec<bool> = entries.iter().map(|e| e.label).collect();
            Ok(ScoreReport {
                fold,
                auc: auc(&scores, &labels)?,
                entries,
                n_train: train_set.len(),
                config: cfg.clone(),
                wall_time,
            })
        })
        .collect()
}

fn fold_job<E: Executor>(
    ds: &GraphDataset,
    plan: &FoldPlan,
    fold: usize,
    cfg: &TrainConfig,
    opts: &CvOptions,
    transform: &TrainTransform<'_>,
    variants: &[(bool, bool)],
    exec: &E,
) -> Result<Vec<ScoreReport>> {
    let train_ids = plan.train_indices(fold, ds.labels(), opts.retain_anomalies);
    let pool: Vec<Graph> = plan
        .train_anomalies(fold, ds.labels())
        .into_iter()
        .map(|i| ds.graphs()[i].clone())
        .collect();
    let train_set = transform(fold, ds.subset(&train_ids)?, pool)?;
    train_and_score(ds, &train_set, &plan.test_indices(fold), cfg, variants, fold, exec)
}

/// Per-variant fold reports, folds in order.
fn cv_variants<E: Executor>(
    ds: &GraphDataset,
    cfg: &TrainConfig,
    opts: &CvOptions,
    transform: &TrainTransform<'_>,
    variants: &[(bool, bool)],
    exec: &E,
) -> Result<Vec<CvReport>> {
    if ds.anomaly_count() == 0 || ds.anomaly_count() == ds.len() {
        return Err(Error::SingleClassInput);
    }
    cfg.validate()?;
    let plan = stratified_kfold(ds, opts.k, opts.seed)?;
    let per_fold: Vec<Vec<ScoreReport>> = exec
        .map(opts.k, |fold| fold_job(ds, &plan, fold, cfg, opts, transform, variants, exec))
        .into_iter()
        .collect::<Result<_>>()?;
    Ok((0..variants.len())
        .map(|v| {
            let folds: Vec<ScoreReport> = per_fold.iter().map(|f| f[v].clone()).collect();
            let aucs: Vec<f64> = folds.iter().map(|r| r.auc).collect();
            let (mean_auc, std_auc) = mean_std(&aucs);
            CvReport {
                folds,
                mean_auc,
                std_auc,
            }
        })
        .collect())
}

/// Stratified k-fold detection: each fold trains on the normal graphs of the
/// other folds (all of them with `retain_anomalies`), scores the whole test
/// fold with the objective's score terms and reports its AUC.
pub fn run_cv<E: Executor>(
    ds: &GraphDataset,
    cfg: &TrainConfig,
    opts: &CvOptions,
    exec: &E,
) -> Result<CvReport> {
    let flags = cfg.loss_terms.score_flags();
    let mut reports = cv_variants(ds, cfg, opts, &identity_transform, &[flags], exec)?;
    Ok(reports.remove(0))
}

/// Fixed train/test split (for datasets that ship one). Training uses the
/// normal graphs among `train_ids` unless `retain_anomalies`.
pub fn run_split<E: Executor>(
    ds: &GraphDataset,
    train_ids: &[usize],
    test_ids: &[usize],
    cfg: &TrainConfig,
    retain_anomalies: bool,
    exec: &E,
) -> Result<ScoreReport> {
    cfg.validate()?;
    let used: Vec<usize> = train_ids
        .iter()
        .copied()
        .filter(|&i| retain_anomalies || !ds.labels()[i])
        .collect();
    let train_set = ds.subset(&used)?;
    let flags = cfg.loss_terms.score_flags();
    let mut r = train_and_score(ds, &train_set, test_ids, cfg, &[flags], 0, exec)?;
    Ok(r.remove(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    Cv,
    SampleEfficiency,
    Contamination,
    DimSweep,
    DepthSweep,
    Ablation,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Cv,
        ExperimentKind::SampleEfficiency,
        ExperimentKind::Contamination,
        ExperimentKind::DimSweep,
        ExperimentKind::DepthSweep,
        ExperimentKind::Ablation,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Cv => "cv",
            ExperimentKind::SampleEfficiency => "sample_efficiency",
            ExperimentKind::Contamination => "contamination",
            ExperimentKind::DimSweep => "dim_sweep",
            ExperimentKind::DepthSweep => "depth_sweep",
            ExperimentKind::Ablation => "ablation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    pub fn axis_name(self) -> &'static str {
        match self {
            ExperimentKind::Cv => "none",
            ExperimentKind::SampleEfficiency => "train_fraction",
            ExperimentKind::Contamination => "contamination_rate",
            ExperimentKind::DimSweep => "output_dim",
            ExperimentKind::DepthSweep => "depth",
            ExperimentKind::Ablation => "variant",
        }
    }

    pub fn default_axis(self) -> Vec<f64> {
        match self {
            ExperimentKind::Cv | ExperimentKind::Ablation => Vec::new(),
            ExperimentKind::SampleEfficiency => alloc::vec![0.05, 0.25, 0.5, 0.75, 1.0],
            ExperimentKind::Contamination => alloc::vec![0.0, 0.04, 0.08, 0.12, 0.16],
            ExperimentKind::DimSweep => alloc::vec![32.0, 64.0, 128.0, 256.0, 512.0],
            ExperimentKind::DepthSweep => alloc::vec![1.0, 2.0, 3.0, 5.0],
        }
    }
}

/// Whether ablation variants are trained with their own objective or only
/// rescored from the jointly trained model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AblationMode {
    #[default]
    Retrain,
    Rescore,
}

impl AblationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Retrain => "retrain",
            AblationMode::Rescore => "rescore",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "retrain" => Some(AblationMode::Retrain),
            "rescore" => Some(AblationMode::Rescore),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentGrid {
    pub kind: ExperimentKind,
    /// Ignored for `Cv` and `Ablation`.
    pub axis: Vec<f64>,
    pub repeats: usize,
    pub base: TrainConfig,
    pub cv: CvOptions,
    pub ablation: AblationMode,
}

impl ExperimentGrid {
    pub fn new(kind: ExperimentKind, base: TrainConfig) -> Self {
        Self {
            kind,
            axis: kind.default_axis(),
            repeats: 1,
            base,
            cv: CvOptions::default(),
            ablation: AblationMode::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |v: f64| Error::InvalidGridAxis {
            kind: self.kind.as_str(),
            value: alloc::format!("{v}"),
        };
        let integral = |v: f64| v >= 1.0 && v == libm::floor(v) && v.is_finite();
        if self.repeats == 0 {
            return Err(Error::InvalidGridAxis {
                kind: self.kind.as_str(),
                value: "repeats=0".into(),
            });
        }
        if matches!(
            self.kind,
            ExperimentKind::SampleEfficiency
                | ExperimentKind::Contamination
                | ExperimentKind::DimSweep
                | ExperimentKind::DepthSweep
        ) && self.axis.is_empty()
        {
            return Err(Error::InvalidGridAxis {
                kind: self.kind.as_str(),
                value: "empty axis".into(),
            });
        }
        for &v in &self.axis {
            let ok = match self.kind {
                ExperimentKind::Cv | ExperimentKind::Ablation => true,
                ExperimentKind::SampleEfficiency => v > 0.0 && v <= 1.0,
                ExperimentKind::Contamination => (0.0..=0.5).contains(&v),
                ExperimentKind::DimSweep | ExperimentKind::DepthSweep => integral(v),
            };
            if !ok {
                return Err(bad(v));
            }
        }
        self.base.validate()
    }

    /// Rows this grid will produce, in order.
    pub fn points(&self) -> Vec<AxisPoint> {
        let point = |label: String, value: f64| AxisPoint { label, value };
        match self.kind {
            ExperimentKind::Cv => alloc::vec![point("cv".into(), 0.0)],
            ExperimentKind::Ablation => alloc::vec![
                point("full".into(), 0.0),
                point("w/o L_node".into(), 1.0),
                point("w/o L_graph".into(), 2.0),
            ],
            _ => self
                .axis
                .iter()
                .map(|&v| point(alloc::format!("{v}"), v))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisPoint {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub point: AxisPoint,
    pub mean_auc: f64,
    pub std_auc: f64,
    /// `(repeat, fold report)` in repeat-then-fold order.
    pub runs: Vec<(usize, ScoreReport)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    pub kind: ExperimentKind,
    pub rows: Vec<GridRow>,
}

/// Layer widths with the output width replaced.
pub fn with_output_dim(dims: &[usize], out: usize) -> Vec<usize> {
    let mut d = dims.to_vec();
    if let Some(last) = d.last_mut() {
        *last = out;
    }
    d
}

/// `depth` layers: the first width repeated as hidden layers, the last as output.
pub fn with_depth(dims: &[usize], depth: usize) -> Vec<usize> {
    let hidden = dims.first().copied().unwrap_or(1);
    let out = dims.last().copied().unwrap_or(1);
    let mut d = alloc::vec![hidden; depth.saturating_sub(1)];
    d.push(out);
    d
}

// Stream tags for per-fold seeds of the data transforms.
const SUBSAMPLE_STREAM: u64 = 0x5eed_0001;
const CONTAMINATION_STREAM: u64 = 0x5eed_0002;

/// Runs `run_cv` once per axis point (and repeat) with the modified
/// training data or configuration, one aggregate row per point.
pub fn run_grid<E: Executor>(ds: &GraphDataset, grid: &ExperimentGrid, exec: &E) -> Result<GridReport> {
    grid.validate()?;
    let points = grid.points();
    let mut runs: Vec<Vec<(usize, ScoreReport)>> = alloc::vec![Vec::new(); points.len()];

    for repeat in 0..grid.repeats {
        let opts = CvOptions {
            seed: if repeat == 0 { grid.cv.seed } else { mix_seed(grid.cv.seed, repeat as u64) },
            ..grid.cv
        };
        let base = reseeded(&grid.base, repeat);
        let results: Vec<CvReport> = match grid.kind {
            ExperimentKind::Cv => alloc::vec![run_cv(ds, &base, &opts, exec)?],
            ExperimentKind::SampleEfficiency => grid
                .axis
                .iter()
                .map(|&fraction| {
                    let t = move |fold: usize, train: GraphDataset, _pool: Vec<Graph>| {
                        subsample_training(&train, fraction, mix_seed(opts.seed ^ SUBSAMPLE_STREAM, fold as u64))
                    };
                    let flags = base.loss_terms.score_flags();
                    cv_variants(ds, &base, &opts, &t, &[flags], exec).map(|mut v| v.remove(0))
                })
                .collect::<Result<_>>()?,
            ExperimentKind::Contamination => grid
                .axis
                .iter()
                .map(|&rate| {
                    let t = move |fold: usize, train: GraphDataset, pool: Vec<Graph>| {
                        inject_contamination(
                            &train,
                            &pool,
                            rate,
                            mix_seed(opts.seed ^ CONTAMINATION_STREAM, fold as u64),
                        )
                    };
                    let flags = base.loss_terms.score_flags();
                    cv_variants(ds, &base, &opts, &t, &[flags], exec).map(|mut v| v.remove(0))
                })
                .collect::<Result<_>>()?,
            ExperimentKind::DimSweep => grid
                .axis
                .iter()
                .map(|&d| {
                    let cfg = TrainConfig {
                        layer_dims: with_output_dim(&base.layer_dims, d as usize),
                        ..base.clone()
                    };
                    run_cv(ds, &cfg, &opts, exec)
                })
                .collect::<Result<_>>()?,
            ExperimentKind::DepthSweep => grid
                .axis
                .iter()
                .map(|&k| {
                    let cfg = TrainConfig {
                        layer_dims: with_depth(&base.layer_dims, k as usize),
                        ..base.clone()
                    };
                    run_cv(ds, &cfg, &opts, exec)
                })
                .collect::<Result<_>>()?,
            ExperimentKind::Ablation => match grid.ablation {
                AblationMode::Retrain => [LossTerms::Joint, LossTerms::GraphOnly, LossTerms::NodeOnly]
                    .into_iter()
                    .map(|terms| {
                        let cfg = TrainConfig {
                            loss_terms: terms,
                            ..base.clone()
                        };
                        run_cv(ds, &cfg, &opts, exec)
                    })
                    .collect::<Result<_>>()?,
                AblationMode::Rescore => {
                    let cfg = TrainConfig {
                        loss_terms: LossTerms::Joint,
                        ..base.clone()
                    };
                    cv_variants(
                        ds,
                        &cfg,
                        &opts,
                        &identity_transform,
                        &[(true, true), (true, false), (false, true)],
                        exec,
                    )?
                }
            },
        };
        for (slot, report) in runs.iter_mut().zip(results) {
            slot.extend(report.folds.into_iter().map(|f| (repeat, f)));
        }
    }

    let rows = points
        .into_iter()
        .zip(runs)
        .map(|(point, runs)| {
            let aucs: Vec<f64> = runs.iter().map(|(_, r)| r.auc).collect();
            let (mean_auc, std_auc) = mean_std(&aucs);
            GridRow {
                point,
                mean_auc,
                std_auc,
                runs,
            }
        })
        .collect();
    Ok(GridReport {
        kind: grid.kind,
        rows,
    })
}

fn reseeded(cfg: &TrainConfig, repeat: usize) -> TrainConfig {
    if repeat == 0 {
        return cfg.clone();
    }
    let r = repeat as u64;
    TrainConfig {
        seed_target: mix_seed(cfg.seed_target, r),
        seed_predictor: mix_seed(cfg.seed_predictor, r),
        seed_shuffle: mix_seed(cfg.seed_shuffle, r),
        ..cfg.clone()
    }
}
