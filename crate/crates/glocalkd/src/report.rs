//! CSV and JSON report writers.
//!
//! | file               | header                                                   |
//! |--------------------|----------------------------------------------------------|
//! | `trace.csv`        | `epoch,objective,graph_loss,node_loss`                   |
//! | `scores.csv`       | `graph_id,score[,label]`, then `# auc=<v>` when labeled  |
//! | `aggregate.csv`    | `kind,point,value,mean_auc,std_auc,n_runs`               |
//! | `folds.csv`        | `kind,point,value,repeat,fold,n_train,n_test,auc`        |
//! | `fold_scores.csv`  | `point,repeat,fold,graph_id,score,label`                 |
//!
//! Reals use shortest round-trip formatting. Wall time is never written, so
//! identical seeds give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use glocalkd_core::{EpochLoss, ExperimentGrid, GraphDataset, GridReport};
use serde_json::{json, Map, Value};

use crate::config::train_entries;
use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "epoch,objective,graph_loss,node_loss";
pub const AGGREGATE_HEADER: &str = "kind,point,value,mean_auc,std_auc,n_runs";
pub const FOLDS_HEADER: &str = "kind,point,value,repeat,fold,n_train,n_test,auc";
pub const FOLD_SCORES_HEADER: &str = "point,repeat,fold,graph_id,score,label";

pub fn trace_csv(trace: &[EpochLoss]) -> String {
    let mut out = format!("{TRACE_HEADER}\n");
    for e in trace {
        let _ = writeln!(out, "{},{:?},{:?},{:?}", e.epoch, e.objective, e.graph, e.node);
    }
    out
}

/// One row per graph; `labels` adds the label column and, when both classes
/// are present, the AUC footer.
pub fn scores_csv(scores: &[f64], labels: Option<&[bool]>, auc: Option<f64>) -> String {
    let mut out = String::from(if labels.is_some() { "graph_id,score,label\n" } else { "graph_id,score\n" });
    for (i, s) in scores.iter().enumerate() {
        match labels {
            Some(l) => {
                let _ = writeln!(out, "{i},{s:?},{}", u8::from(l[i]));
            }
            None => {
                let _ = writeln!(out, "{i},{s:?}");
            }
        }
    }
    if let Some(a) = auc {
        let _ = writeln!(out, "# auc={a:?}");
    }
    out
}

pub fn aggregate_csv(report: &GridReport) -> String {
    let kind = report.kind.as_str();
    let mut out = format!("{AGGREGATE_HEADER}\n");
    for row in &report.rows {
        let _ = writeln!(
            out,
            "{kind},{},{:?},{:?},{:?},{}",
            row.point.label,
            row.point.value,
            row.mean_auc,
            row.std_auc,
            row.runs.len()
        );
    }
    out
}

pub fn folds_csv(report: &GridReport) -> String {
    let kind = report.kind.as_str();
    let mut out = format!("{FOLDS_HEADER}\n");
    for row in &report.rows {
        for (repeat, r) in &row.runs {
            let _ = writeln!(
                out,
                "{kind},{},{:?},{repeat},{},{},{},{:?}",
                row.point.label,
                row.point.value,
                r.fold,
                r.n_train,
                r.entries.len(),
                r.auc
            );
        }
    }
    out
}

pub fn fold_scores_csv(report: &GridReport) -> String {
    let mut out = format!("{FOLD_SCORES_HEADER}\n");
    for row in &report.rows {
        for (repeat, r) in &row.runs {
            for e in &r.entries {
                let _ = writeln!(
                    out,
                    "{},{repeat},{},{},{:?},{}",
                    row.point.label,
                    r.fold,
                    e.id,
                    e.score,
                    u8::from(e.label)
                );
            }
        }
    }
    out
}

pub fn dataset_json(ds: &GraphDataset, sha256: &str) -> Value {
    json!({
        "name": ds.name(),
        "graphs": ds.len(),
        "anomalies": ds.anomaly_count(),
        "feature_kind": ds.feature_kind().as_str(),
        "sha256": sha256,
    })
}

pub fn config_json(cfg: &glocalkd_core::TrainConfig) -> Value {
    let mut m = Map::new();
    for (k, v) in train_entries(cfg) {
        m.insert(k.to_string(), Value::String(v));
    }
    Value::Object(m)
}

/// Summary with sorted keys: configuration, seeds, dataset and aggregates.
pub fn summary_json(report: &GridReport, grid: &ExperimentGrid, dataset: Value) -> String {
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|row| {
            let aucs: Vec<f64> = row.runs.iter().map(|(_, r)| r.auc).collect();
            json!({
                "point": row.point.label,
                "value": row.point.value,
                "mean_auc": row.mean_auc,
                "std_auc": row.std_auc,
                "aucs": aucs,
            })
        })
        .collect();
    let v = json!({
        "kind": report.kind.as_str(),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "dataset": dataset,
        "config": config_json(&grid.base),
        "seeds": {
            "target": grid.base.seed_target,
            "predictor": grid.base.seed_predictor,
            "shuffle": grid.base.seed_shuffle,
            "cv": grid.cv.seed,
        },
        "grid": {
            "axis": grid.axis,
            "repeats": grid.repeats,
            "folds": grid.cv.k,
            "retain_anomalies": grid.cv.retain_anomalies,
            "ablation": grid.ablation.as_str(),
        },
        "rows": rows,
    });
    let mut s = serde_json::to_string_pretty(&v).unwrap_or_default();
    s.push('\n');
    s
}

pub fn write(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}
