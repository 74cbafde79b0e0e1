//! Command-line front end.
//!
//! Every command writes into the directory given by `--out` (created when
//! missing): first `manifest.json`, then its results. Exit status is 0 on
//! success, 2 for input or parse errors, 3 for configuration or
//! compatibility errors and 4 for numerical failures.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use glocalkd_core::{
    auc, run_grid, run_split, score, synth_corpus, to_anomaly_labels, train, AxisPoint, ExperimentGrid,
    ExperimentKind, GraphDataset, GridReport, GridRow, TrainConfig,
};
use serde_json::{json, Map, Value};

use crate::config::{self, KeyValues, TRAIN_KEYS};
use crate::error::{Error, Result};
use crate::manifest::{self, RunManifest};
use crate::modelfile;
use crate::par::Pool;
use crate::report;
use crate::snapshot;
use crate::tu;

pub const DATASET_FILE: &str = "dataset.txt";
pub const MODEL_FILE: &str = "model.txt";
pub const TRACE_FILE: &str = "trace.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const FOLDS_FILE: &str = "folds.csv";
pub const FOLD_SCORES_FILE: &str = "fold_scores.csv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, Parser)]
#[command(name = "glocalkd", version, about = "Graph-level anomaly detection by glocal random distillation")]
pub struct Cli {
    /// Worker threads (default: GLOCALKD_JOBS, else one per CPU).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a benchmark directory into a dataset snapshot.
    Ingest(IngestArgs),
    /// Generate a synthetic corpus snapshot.
    Synth(SynthArgs),
    /// Train a model on the normal graphs of a snapshot.
    Train(TrainArgs),
    /// Score every graph of a snapshot with a trained model.
    Score(ScoreArgs),
    /// Run cross-validated detection or one of the experiment grids.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory holding `<NAME>_A.txt`, `<NAME>_graph_indicator.txt`, ...
    pub dir: PathBuf,
    /// Dataset name (default: the directory name).
    #[arg(long)]
    pub name: Option<String>,
    /// Class id treated as anomalous (default: the least frequent class).
    #[arg(long, allow_hyphen_values = true)]
    pub anomaly_class: Option<i64>,
    /// Keep the snapshot unlabeled.
    #[arg(long, conflicts_with = "anomaly_class")]
    pub unlabeled: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// `key = value` corpus spec (default: the global-anomaly preset).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainFlags {
    /// `key = value` training config; GLOCALKD_<KEY> variables override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed_target: Option<u64>,
    #[arg(long)]
    pub seed_predictor: Option<u64>,
    #[arg(long)]
    pub seed_shuffle: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset snapshot.
    pub dataset: PathBuf,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    pub model: PathBuf,
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// cv, sample_efficiency, contamination, dim_sweep, depth_sweep or ablation.
    #[arg(value_parser = parse_kind)]
    pub kind: ExperimentKind,
    /// Labeled dataset snapshot.
    pub dataset: PathBuf,
    /// `key = value` grid file (axis, repeats, folds, cv_seed, ...).
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Fixed split file with `train = i,j,...` and `test = ...` (kind cv only).
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_kind(s: &str) -> std::result::Result<ExperimentKind, String> {
    ExperimentKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
        format!("unknown kind {s:?}; expected one of {}", names.join(", "))
    })
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    let jobs = match cli.jobs {
        Some(j) => Some(j),
        None => match std::env::var(format!("{}JOBS", config::ENV_PREFIX)) {
            Ok(v) => Some(
                v.parse()
                    .map_err(|_| Error::Config(format!("GLOCALKD_JOBS: cannot parse {v:?}")))?,
            ),
            Err(_) => None,
        },
    };
    match cli.command {
        Command::Ingest(a) => ingest(&a),
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train_cmd(&a, &Pool::new(jobs)?),
        Command::Score(a) => score_cmd(&a, &Pool::new(jobs)?),
        Command::Experiment(a) => experiment(&a, &Pool::new(jobs)?),
    }
}

fn prepare_out(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn artifacts(dir: &Path, names: &[&str]) -> Vec<String> {
    names.iter().map(|n| dir.join(n).display().to_string()).collect()
}

fn seed_map(pairs: &[(&str, u64)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), json!(v))).collect()
}

fn train_map(cfg: &TrainConfig) -> Map<String, Value> {
    config::train_entries(cfg)
        .into_iter()
        .map(|(k, v)| (k.to_string(), Value::String(v)))
        .collect()
}

/// Human-readable one-line dataset summary.
pub fn summary_line(ds: &GraphDataset) -> String {
    let rate = if ds.is_labeled() {
        format!("{:.4}", ds.anomaly_rate())
    } else {
        "-".to_string()
    };
    format!(
        "{}: graphs {} mean_nodes {:.2} mean_edges {:.2} anomaly_rate {rate}",
        ds.name(),
        ds.len(),
        ds.mean_nodes(),
        ds.mean_edges()
    )
}

fn ingest(a: &IngestArgs) -> Result<()> {
    if !a.dir.is_dir() {
        return Err(Error::MissingFile(a.dir.clone()));
    }
    let name = match &a.name {
        Some(n) => n.clone(),
        None => a
            .dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::MissingFile(a.dir.clone()))?
            .to_string(),
    };
    let ds = tu::parse_benchmark(&a.dir, &name)?;
    let ds = if a.unlabeled { ds } else { to_anomaly_labels(&ds, a.anomaly_class)? };

    let inputs: Vec<PathBuf> = tu::benchmark_files(&a.dir, &name)
        .into_iter()
        .filter(|p| p.exists())
        .collect();
    prepare_out(&a.out)?;
    let mut m = RunManifest::new("ingest");
    m.config.insert("name".into(), json!(name));
    m.config.insert("anomaly_class".into(), json!(a.anomaly_class));
    m.config.insert("labeled".into(), json!(!a.unlabeled));
    m.inputs.push((a.dir.display().to_string(), manifest::sha256_files(&inputs)?));
    m.artifacts = artifacts(&a.out, &[DATASET_FILE]);
    m.write(&a.out)?;

    snapshot::write(&ds, &a.out.join(DATASET_FILE))?;
    println!("{}", summary_line(&ds));
    Ok(())
}

fn synth(a: &SynthArgs) -> Result<()> {
    let kv = match &a.config {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    let spec = config::synth_spec(&kv)?;
    let ds = synth_corpus(&spec, a.seed)?;

    prepare_out(&a.out)?;
    let mut m = RunManifest::new("synth");
    m.config = kv_map(&kv);
    m.seeds = seed_map(&[("synth", a.seed)]);
    if let Some(p) = &a.config {
        m.inputs.push((p.display().to_string(), manifest::sha256_file(p)?));
    }
    m.artifacts = artifacts(&a.out, &[DATASET_FILE]);
    m.write(&a.out)?;

    snapshot::write(&ds, &a.out.join(DATASET_FILE))?;
    println!("{}", summary_line(&ds));
    Ok(())
}

fn kv_map(kv: &KeyValues) -> Map<String, Value> {
    kv.keys()
        .map(|k| (k.to_string(), json!(kv.get(k).unwrap_or_default())))
        .collect()
}

/// Defaults, then the config file, then `GLOCALKD_*`, then flags.
pub fn resolve_train_config(
    flags: &TrainFlags,
    env: impl Fn(&str) -> Option<String>,
) -> Result<TrainConfig> {
    let mut kv = match &flags.config {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    kv.overlay_env(&TRAIN_KEYS, env);
    for (key, v) in [
        ("seed_target", flags.seed_target),
        ("seed_predictor", flags.seed_predictor),
        ("seed_shuffle", flags.seed_shuffle),
    ] {
        if let Some(v) = v {
            kv.set(key, v.to_string());
        }
    }
    config::train_config(&kv)
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok()
}

fn train_seeds(cfg: &TrainConfig) -> Map<String, Value> {
    seed_map(&[
        ("target", cfg.seed_target),
        ("predictor", cfg.seed_predictor),
        ("shuffle", cfg.seed_shuffle),
    ])
}

fn train_cmd(a: &TrainArgs, pool: &Pool) -> Result<()> {
    let cfg = resolve_train_config(&a.train, env_var)?;
    let ds = snapshot::read(&a.dataset)?;
    let train_set = if ds.is_labeled() {
        ds.subset(&ds.indices_where(false))?
    } else {
        ds.clone()
    };

    prepare_out(&a.out)?;
    let mut m = RunManifest::new("train");
    m.config = train_map(&cfg);
    m.seeds = train_seeds(&cfg);
    m.inputs.push((a.dataset.display().to_string(), manifest::sha256_file(&a.dataset)?));
    if let Some(p) = &a.train.config {
        m.inputs.push((p.display().to_string(), manifest::sha256_file(p)?));
    }
    m.artifacts = artifacts(&a.out, &[MODEL_FILE, TRACE_FILE]);
    m.write(&a.out)?;

    let outcome = train(&train_set, &cfg, pool)?;
    modelfile::write_model(&outcome.model, &a.out.join(MODEL_FILE))?;
    report::write(&a.out.join(TRACE_FILE), &report::trace_csv(&outcome.trace))?;
    if let Some(last) = outcome.trace.last() {
        println!(
            "trained on {} graphs: {} epochs, {} steps, final objective {:.6}",
            train_set.len(),
            cfg.epochs,
            outcome.steps,
            last.objective
        );
    }
    Ok(())
}

fn score_cmd(a: &ScoreArgs, pool: &Pool) -> Result<()> {
    let model = modelfile::read_model(&a.model)?;
    let ds = snapshot::read(&a.dataset)?;

    prepare_out(&a.out)?;
    let mut m = RunManifest::new("score");
    m.config.insert("lambda".into(), json!(model.lambda()));
    m.config.insert("loss_terms".into(), json!(model.loss_terms().as_str()));
    m.seeds = seed_map(&[("target", model.seed_target()), ("predictor", model.seed_predictor())]);
    m.inputs.push((a.model.display().to_string(), manifest::sha256_file(&a.model)?));
    m.inputs.push((a.dataset.display().to_string(), manifest::sha256_file(&a.dataset)?));
    m.artifacts = artifacts(&a.out, &[SCORES_FILE]);
    m.write(&a.out)?;

    let scores = glocalkd_core::Executor::map(pool, ds.len(), |i| score(&model, &ds.graphs()[i]))
        .into_iter()
        .collect::<std::result::Result<Vec<f64>, _>>()?;
    let labels = ds.is_labeled().then(|| ds.labels());
    let auc_value = match labels {
        Some(l) if l.contains(&true) && l.contains(&false) => Some(auc(&scores, l)?),
        _ => None,
    };
    report::write(&a.out.join(SCORES_FILE), &report::scores_csv(&scores, labels, auc_value))?;
    match auc_value {
        Some(v) => println!("scored {} graphs, auc {v:.4}", scores.len()),
        None => println!("scored {} graphs", scores.len()),
    }
    Ok(())
}

fn parse_ids(kv: &KeyValues, key: &str, path: &Path, n: usize) -> Result<Vec<usize>> {
    let v = kv
        .get(key)
        .ok_or_else(|| Error::Config(format!("{}: missing `{key}` list", path.display())))?;
    v.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let id: usize = t
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{}: {key}: invalid graph id {t:?}", path.display())))?;
            if id >= n {
                return Err(Error::Config(format!(
                    "{}: {key}: graph id {id} outside 0..{n}",
                    path.display()
                )));
            }
            Ok(id)
        })
        .collect()
}

fn experiment(a: &ExperimentArgs, pool: &Pool) -> Result<()> {
    let cfg = resolve_train_config(&a.train, env_var)?;
    let kv = match &a.grid {
        Some(p) => KeyValues::read(p)?,
        None => KeyValues::default(),
    };
    let grid = config::grid(&kv, a.kind, cfg)?;
    let ds = snapshot::read(&a.dataset)?;
    if !ds.is_labeled() {
        return Err(Error::Config(format!(
            "{}: experiments need a labeled snapshot",
            a.dataset.display()
        )));
    }
    let split = match &a.split {
        Some(p) if a.kind != ExperimentKind::Cv => {
            return Err(Error::Config(format!(
                "{}: split files are only supported for kind cv",
                p.display()
            )))
        }
        Some(p) => {
            let s = KeyValues::read(p)?;
            Some((parse_ids(&s, "train", p, ds.len())?, parse_ids(&s, "test", p, ds.len())?))
        }
        None => None,
    };

    prepare_out(&a.out)?;
    let dataset_sha = manifest::sha256_file(&a.dataset)?;
    let mut m = RunManifest::new("experiment");
    m.config = train_map(&grid.base);
    m.config.insert("kind".into(), json!(grid.kind.as_str()));
    m.config.insert("axis".into(), json!(grid.axis));
    m.config.insert("repeats".into(), json!(grid.repeats));
    m.config.insert("folds".into(), json!(grid.cv.k));
    m.config.insert("retain_anomalies".into(), json!(grid.cv.retain_anomalies));
    m.config.insert("ablation".into(), json!(grid.ablation.as_str()));
    m.seeds = train_seeds(&grid.base);
    m.seeds.insert("cv".into(), json!(grid.cv.seed));
    m.inputs.push((a.dataset.display().to_string(), dataset_sha.clone()));
    for p in a.grid.iter().chain(&a.split).chain(&a.train.config) {
        m.inputs.push((p.display().to_string(), manifest::sha256_file(p)?));
    }
    m.artifacts = artifacts(&a.out, &[AGGREGATE_FILE, FOLDS_FILE, FOLD_SCORES_FILE, SUMMARY_FILE]);
    m.write(&a.out)?;

    let result = match split {
        Some((train_ids, test_ids)) => split_report(&ds, &grid, &train_ids, &test_ids, pool)?,
        None => run_grid(&ds, &grid, pool)?,
    };
    write_grid_outputs(&a.out, &result, &grid, report::dataset_json(&ds, &dataset_sha))?;
    for row in &result.rows {
        println!(
            "{} {}: auc {:.4} +- {:.4} over {} runs",
            result.kind.as_str(),
            row.point.label,
            row.mean_auc,
            row.std_auc,
            row.runs.len()
        );
    }
    Ok(())
}

fn split_report(
    ds: &GraphDataset,
    grid: &ExperimentGrid,
    train_ids: &[usize],
    test_ids: &[usize],
    pool: &Pool,
) -> Result<GridReport> {
    let r = run_split(ds, train_ids, test_ids, &grid.base, grid.cv.retain_anomalies, pool)?;
    Ok(GridReport {
        kind: ExperimentKind::Cv,
        rows: vec![GridRow {
            point: AxisPoint {
                label: "split".into(),
                value: 0.0,
            },
            mean_auc: r.auc,
            std_auc: 0.0,
            runs: vec![(0, r)],
        }],
    })
}

/// Writes the aggregate, per-fold, per-graph and summary reports.
pub fn write_grid_outputs(dir: &Path, r: &GridReport, grid: &ExperimentGrid, dataset: Value) -> Result<()> {
    report::write(&dir.join(AGGREGATE_FILE), &report::aggregate_csv(r))?;
    report::write(&dir.join(FOLDS_FILE), &report::folds_csv(r))?;
    report::write(&dir.join(FOLD_SCORES_FILE), &report::fold_scores_csv(r))?;
    report::write(&dir.join(SUMMARY_FILE), &report::summary_json(r, grid, dataset))
}
