//! Canonical single-file dataset snapshot.
//!
//! ```text
//! glocalkd-dataset 1
//! name AIDS
//! feature_kind attributed
//! feature_dim 4
//! labeled true
//! graphs 2
//! graph 0 nodes 3 edges 2 class 1 label 1
//! e 0 1
//! e 1 2
//! x 0.5 -1.0 2.0 0.0
//! ...
//! ```
//!
//! Every graph block lists its edges (`i < j`, ascending) and, for attributed
//! data, one `x` row per node. Reals use Rust's shortest round-trip
//! formatting, so writing the same dataset always yields the same bytes.

use std::fmt::Write as _;
use std::path::Path;

use glocalkd_core::{FeatureKind, Graph, GraphDataset, Matrix};

use crate::error::{Error, Result};

const MAGIC: &str = "glocalkd-dataset 1";

pub fn to_string(ds: &GraphDataset) -> String {
    let mut out = String::new();
    let dim = ds.feature_dim().unwrap_or(0);
    // `fmt::Write` for `String` is infallible.
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "name {}", ds.name().replace(['\n', '\r'], " "));
    let _ = writeln!(out, "feature_kind {}", ds.feature_kind().as_str());
    let _ = writeln!(out, "feature_dim {dim}");
    let _ = writeln!(out, "labeled {}", ds.is_labeled());
    let _ = writeln!(out, "graphs {}", ds.len());
    for (i, g) in ds.graphs().iter().enumerate() {
        let label = if ds.is_labeled() {
            u8::from(ds.labels()[i]).to_string()
        } else {
            "-".to_string()
        };
        let _ = writeln!(
            out,
            "graph {i} nodes {} edges {} class {} label {label}",
            g.num_nodes(),
            g.num_edges(),
            ds.classes()[i]
        );
        for &(a, b) in g.edges() {
            let _ = writeln!(out, "e {a} {b}");
        }
        if let Some(x) = g.features() {
            for row in x.row_iter() {
                out.push('x');
                for v in row {
                    let _ = write!(out, " {v:?}");
                }
                out.push('\n');
            }
        }
    }
    out
}

pub fn write(ds: &GraphDataset, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(ds)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<GraphDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text, path)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    path: &'a Path,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(Error::parse(self.path, self.line + 1, "unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::parse(self.path, self.line, message)
    }

    /// The value after `key ` on the next line.
    fn field(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key} ...`")))
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid number {s:?}")))
    }
}

/// Parses snapshot text; `path` only labels error messages.
pub fn parse(text: &str, path: &Path) -> Result<GraphDataset> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        path,
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err(format!("expected header `{MAGIC}`")));
    }
    let name = lines.field("name")?;
    let kind_str = lines.field("feature_kind")?;
    let kind = FeatureKind::parse(kind_str).ok_or_else(|| lines.err(format!("unknown feature kind {kind_str:?}")))?;
    let v = lines.field("feature_dim")?;
    let dim: usize = lines.number(v)?;
    let v = lines.field("labeled")?;
    let labeled: bool = lines.number(v)?;
    let v = lines.field("graphs")?;
    let count: usize = lines.number(v)?;

    let mut graphs = Vec::with_capacity(count);
    let mut classes = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for i in 0..count {
        let header = lines.next()?;
        let parts: Vec<&str> = header.split(' ').collect();
        let shape_ok = parts.len() == 10
            && parts[0] == "graph"
            && parts[2] == "nodes"
            && parts[4] == "edges"
            && parts[6] == "class"
            && parts[8] == "label";
        if !shape_ok {
            return Err(lines.err("expected `graph <i> nodes <n> edges <m> class <c> label <l>`"));
        }
        if lines.number::<usize>(parts[1])? != i {
            return Err(lines.err(format!("expected graph {i}")));
        }
        let n: usize = lines.number(parts[3])?;
        let m: usize = lines.number(parts[5])?;
        classes.push(lines.number::<i64>(parts[7])?);
        labels.push(match parts[9] {
            "1" => true,
            "0" | "-" => false,
            other => return Err(lines.err(format!("invalid label {other:?}"))),
        });

        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let l = lines.next()?;
            let mut it = l.split(' ');
            match (it.next(), it.next(), it.next(), it.next()) {
                (Some("e"), Some(a), Some(b), None) => {
                    edges.push((lines.number::<usize>(a)?, lines.number::<usize>(b)?))
                }
                _ => return Err(lines.err("expected `e <i> <j>`")),
            }
        }
        let features = if kind == FeatureKind::Attributed {
            let mut data = Vec::with_capacity(n * dim);
            for _ in 0..n {
                let l = lines.next()?;
                let mut it = l.split(' ');
                if it.next() != Some("x") {
                    return Err(lines.err("expected `x ...` feature row"));
                }
                let before = data.len();
                for v in it {
                    data.push(lines.number::<f64>(v)?);
                }
                if data.len() - before != dim {
                    return Err(lines.err(format!("feature row needs {dim} values")));
                }
            }
            Some(Matrix::from_vec(n, dim, data))
        } else {
            None
        };
        let g = Graph::new(n, edges, features).map_err(|e| lines.err(e.to_string()))?;
        if g.num_edges() != m {
            return Err(lines.err("duplicate edge in graph block"));
        }
        graphs.push(g);
    }
    if let Ok(extra) = lines.next() {
        if !extra.trim().is_empty() {
            return Err(lines.err("trailing content after the last graph"));
        }
    }

    let ds = GraphDataset::new(name, kind, graphs, classes)?;
    Ok(if labeled { ds.with_labels(labels)? } else { ds })
}
