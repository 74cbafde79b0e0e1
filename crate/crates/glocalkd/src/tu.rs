//! Reader for the multi-file text layout of public graph-classification
//! benchmarks (`<DS>_A.txt`, `<DS>_graph_indicator.txt`, ...).
//!
//! Indices in the files are 1-based. Node `i` is the `i`-th line of the
//! graph indicator. Self-loop records are dropped: the network adds its own
//! self-loops during normalization.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use glocalkd_core::{FeatureKind, Graph, GraphDataset, Matrix};

use crate::error::{Error, Result};

/// Parses `dir`, taking the dataset name from the directory name.
pub fn parse_benchmark_dir(dir: &Path) -> Result<GraphDataset> {
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::MissingFile(dir.to_path_buf()))?;
    parse_benchmark(dir, name)
}

/// Parses the files `<dir>/<name>_*.txt`. Graphs keep their original class
/// ids; the result is unlabeled until converted with `to_anomaly_labels`.
pub fn parse_benchmark(dir: &Path, name: &str) -> Result<GraphDataset> {
    let file = |suffix: &str| dir.join(format!("{name}_{suffix}.txt"));

    let indicator_path = file("graph_indicator");
    let labels_path = file("graph_labels");
    let edges_path = file("A");
    let indicator = read_ints(&indicator_path)?;
    let classes: Vec<i64> = read_ints(&labels_path)?.into_iter().map(|(_, v)| v).collect();
    let num_graphs = classes.len();

    // Per node: owning graph (0-based) and local index inside it.
    let mut owner = Vec::with_capacity(indicator.len());
    let mut local = Vec::with_capacity(indicator.len());
    let mut sizes = vec![0usize; num_graphs];
    for &(line, gid) in &indicator {
        if gid < 1 || gid as usize > num_graphs {
            return Err(Error::parse(
                &indicator_path,
                line,
                format!("graph id {gid} outside 1..={num_graphs}"),
            ));
        }
        let g = gid as usize - 1;
        owner.push(g);
        local.push(sizes[g]);
        sizes[g] += 1;
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::parse(
            &indicator_path,
            0,
            format!("graph {} has no nodes", g + 1),
        ));
    }

    let mut edges: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); num_graphs];
    for (line, fields) in read_rows(&edges_path)? {
        let [a, b] = &fields[..] else {
            return Err(Error::parse(&edges_path, line, "expected two node ids"));
        };
        let a = parse_node(&edges_path, line, a, owner.len())?;
        let b = parse_node(&edges_path, line, b, owner.len())?;
        if owner[a] != owner[b] {
            return Err(Error::CrossGraphEdge {
                file: edges_path,
                line,
                a: a + 1,
                b: b + 1,
                ga: owner[a] + 1,
                gb: owner[b] + 1,
            });
        }
        let (la, lb) = (local[a], local[b]);
        if la != lb {
            edges[owner[a]].insert((la.min(lb), la.max(lb)));
        }
    }

    let attributes_path = file("node_attributes");
    let node_labels_path = file("node_labels");
    let (kind, rows) = if attributes_path.exists() {
        (FeatureKind::Attributed, Some(read_attributes(&attributes_path, owner.len())?))
    } else if node_labels_path.exists() {
        (FeatureKind::Attributed, Some(one_hot_labels(&node_labels_path, owner.len())?))
    } else {
        (FeatureKind::DegreeOneHot, None)
    };

    let mut features: Vec<Vec<f64>> = vec![Vec::new(); num_graphs];
    let width = rows.as_ref().map_or(0, |r| r.first().map_or(0, Vec::len));
    if let Some(rows) = rows {
        for (node, row) in rows.into_iter().enumerate() {
            features[owner[node]].extend(row);
        }
    }

    let graphs = sizes
        .iter()
        .zip(edges)
        .zip(features)
        .map(|((&n, e), x)| {
            let x = (width > 0).then(|| Matrix::from_vec(n, width, x));
            Graph::new(n, e, x).map_err(Error::from)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GraphDataset::new(name, kind, graphs, classes)?)
}

fn parse_node(file: &Path, line: usize, field: &str, nodes: usize) -> Result<usize> {
    let id: usize = field
        .parse()
        .map_err(|_| Error::parse(file, line, format!("invalid node id {field:?}")))?;
    if id == 0 || id > nodes {
        return Err(Error::NodeWithoutGraphAssignment {
            file: file.to_path_buf(),
            line,
            node: id,
        });
    }
    Ok(id - 1)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Nonblank lines split on commas (or whitespace), with 1-based line numbers.
fn read_rows(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let text = read(path)?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let fields: Vec<String> = if l.contains(',') {
                l.split(',').map(|f| f.trim().to_string()).collect()
            } else {
                l.split_whitespace().map(str::to_string).collect()
            };
            (i + 1, fields)
        })
        .collect())
}

fn read_ints(path: &Path) -> Result<Vec<(usize, i64)>> {
    read_rows(path)?
        .into_iter()
        .map(|(line, fields)| {
            let v = fields[0]
                .parse()
                .map_err(|_| Error::parse(path, line, format!("invalid integer {:?}", fields[0])))?;
            Ok((line, v))
        })
        .collect()
}

fn check_row_count(path: &Path, rows: &[(usize, Vec<String>)], nodes: usize) -> Result<()> {
    if rows.len() > nodes {
        return Err(Error::NodeWithoutGraphAssignment {
            file: path.to_path_buf(),
            line: rows[nodes].0,
            node: nodes + 1,
        });
    }
    if rows.len() < nodes {
        return Err(Error::parse(
            path,
            rows.last().map_or(0, |r| r.0),
            format!("{} rows for {nodes} nodes", rows.len()),
        ));
    }
    Ok(())
}

fn read_attributes(path: &Path, nodes: usize) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(path)?;
    check_row_count(path, &rows, nodes)?;
    let expected = rows.first().map_or(0, |r| r.1.len());
    rows.into_iter()
        .map(|(line, fields)| {
            if fields.len() != expected {
                return Err(Error::RaggedAttributeRow {
                    file: path.to_path_buf(),
                    line,
                    expected,
                    found: fields.len(),
                });
            }
            fields
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(path, line, format!("invalid number {f:?}")))
                })
                .collect()
        })
        .collect()
}

/// One-hot rows over the sorted distinct node labels.
fn one_hot_labels(path: &Path, nodes: usize) -> Result<Vec<Vec<f64>>> {
    let rows = read_rows(path)?;
    check_row_count(path, &rows, nodes)?;
    let values: Vec<i64> = rows
        .iter()
        .map(|(line, fields)| {
            fields[0]
                .parse()
                .map_err(|_| Error::parse(path, *line, format!("invalid node label {:?}", fields[0])))
        })
        .collect::<Result<_>>()?;
    let distinct: Vec<i64> = values.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    Ok(values
        .iter()
        .map(|v| {
            let mut row = vec![0.0; distinct.len()];
            row[distinct.binary_search(v).unwrap_or(0)] = 1.0;
            row
        })
        .collect())
}

/// Paths the parser reads for `name` in `dir`, required ones first.
pub fn benchmark_files(dir: &Path, name: &str) -> Vec<PathBuf> {
    ["A", "graph_indicator", "graph_labels", "node_attributes", "node_labels"]
        .iter()
        .map(|s| dir.join(format!("{name}_{s}.txt")))
        .collect()
}
