//! Graph collections, anomaly labelling and the data-side experiment transforms.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::SeedRng;

/// How node features are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// Every graph carries its own feature matrix; one shared width per dataset.
    Attributed,
    /// Plain graphs; features are one-hot node degrees computed at model time.
    DegreeOneHot,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Attributed => "attributed",
            FeatureKind::DegreeOneHot => "degree-one-hot",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "attributed" => Some(FeatureKind::Attributed),
            "degree-one-hot" => Some(FeatureKind::DegreeOneHot),
            _ => None,
        }
    }
}

/// An ordered graph collection with original class ids and binary anomaly labels.
///
/// `labels[i]` is `true` for anomalous graphs. Datasets without ground truth
/// carry all-`false` labels and report `is_labeled() == false`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphDataset {
    name: String,
    feature_kind: FeatureKind,
    graphs: Vec<Graph>,
    classes: Vec<i64>,
    labels: Vec<bool>,
    labeled: bool,
}

impl GraphDataset {
    /// Unlabeled dataset; `classes` are the original per-graph class ids.
    pub fn new(
        name: impl Into<String>,
        feature_kind: FeatureKind,
        graphs: Vec<Graph>,
        classes: Vec<i64>,
    ) -> Result<Self> {
        if classes.len() != graphs.len() {
            return Err(Error::LabelLengthMismatch {
                graphs: graphs.len(),
                labels: classes.len(),
            });
        }
        let labels = alloc::vec![false; graphs.len()];
        let ds = Self {
            name: name.into(),
            feature_kind,
            graphs,
            classes,
            labels,
            labeled: false,
        };
        ds.check_features()?;
        Ok(ds)
    }

    /// Attaches ground-truth anomaly labels.
    pub fn with_labels(mut self, labels: Vec<bool>) -> Result<Self> {
        if labels.len() != self.graphs.len() {
            return Err(Error::LabelLengthMismatch {
                graphs: self.graphs.len(),
                labels: labels.len(),
            });
        }
        if !self.graphs.is_empty() && labels.iter().all(|&l| l) {
            return Err(Error::NoNormalGraph);
        }
        self.labels = labels;
        self.labeled = true;
        Ok(self)
    }

    fn check_features(&self) -> Result<()> {
        match self.feature_kind {
            FeatureKind::Attributed => {
                let mut dim = None;
                for (i, g) in self.graphs.iter().enumerate() {
                    let d = g.feature_dim().ok_or(Error::FeatureKindMismatch(i))?;
                    match dim {
                        None => dim = Some(d),
                        Some(expected) if expected != d => {
                            return Err(Error::FeatureDimMismatch { expected, found: d })
                        }
                        _ => {}
                    }
                }
            }
            FeatureKind::DegreeOneHot => {
                if let Some(i) = self.graphs.iter().position(|g| g.features().is_some()) {
                    return Err(Error::FeatureKindMismatch(i));
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn feature_kind(&self) -> FeatureKind {
        self.feature_kind
    }

    /// Shared feature width for attributed datasets.
    pub fn feature_dim(&self) -> Option<usize> {
        self.graphs.first().and_then(Graph::feature_dim)
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn is_labeled(&self) -> bool {
        self.labeled
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn anomaly_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }

    pub fn anomaly_rate(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.anomaly_count() as f64 / self.len() as f64
        }
    }

    pub fn mean_nodes(&self) -> f64 {
        mean(self.graphs.iter().map(|g| g.num_nodes() as f64))
    }

    pub fn mean_edges(&self) -> f64 {
        mean(self.graphs.iter().map(|g| g.num_edges() as f64))
    }

    /// Sub-dataset in the given index order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let ds = Self {
            name: self.name.clone(),
            feature_kind: self.feature_kind,
            graphs: indices.iter().map(|&i| self.graphs[i].clone()).collect(),
            classes: indices.iter().map(|&i| self.classes[i]).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            labeled: self.labeled,
        };
        if ds.labeled && !ds.is_empty() && ds.labels.iter().all(|&l| l) {
            return Err(Error::NoNormalGraph);
        }
        Ok(ds)
    }

    pub fn indices_where(&self, anomalous: bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.labels[i] == anomalous).collect()
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Minority-class conversion: the least frequent class (ties to the smallest
/// id) or `anomaly_class` when given becomes label 1, everything else 0.
pub fn to_anomaly_labels(ds: &GraphDataset, anomaly_class: Option<i64>) -> Result<GraphDataset> {
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for &c in ds.classes() {
        *counts.entry(c).or_default() += 1;
    }
    let anomaly = match anomaly_class {
        Some(c) if counts.contains_key(&c) => c,
        Some(c) => return Err(Error::UnknownClassId(c)),
        None => {
            let mut best: Option<(i64, usize)> = None;
            for (&c, &n) in &counts {
                if best.map_or(true, |(_, bn)| n < bn) {
                    best = Some((c, n));
                }
            }
            best.ok_or(Error::EmptyResult)?.0
        }
    };
    let labels = ds.classes().iter().map(|&c| c == anomaly).collect();
    ds.clone().with_labels(labels)
}

/// Stratified fold assignment over the anomaly labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
}

impl FoldPlan {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    /// Complement of the test fold; anomalies dropped unless `retain_anomalies`.
    pub fn train_indices(&self, fold: usize, labels: &[bool], retain_anomalies: bool) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold && (retain_anomalies || !labels[i]))
            .collect()
    }

    /// Anomalies on the training side of `fold`.
    pub fn train_anomalies(&self, fold: usize, labels: &[bool]) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold && labels[i])
            .collect()
    }
}

/// Shuffles each class with `seed`, then deals it round-robin over the folds,
/// continuing where the previous class stopped so fold sizes stay balanced.
pub fn stratified_kfold(ds: &GraphDataset, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > ds.len() {
        return Err(Error::FoldCountTooLarge { k, n: ds.len() });
    }
    let mut rng = SeedRng::new(seed);
    let mut assignments = alloc::vec![0; ds.len()];
    let mut offset = 0;
    for class in [false, true] {
        let mut members = ds.indices_where(class);
        rng.shuffle(&mut members);
        for (pos, &i) in members.iter().enumerate() {
            assignments[i] = (offset + pos) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
    })
}

/// `ceil(x)` that ignores representation noise just above an integer.
fn ceil_tolerant(x: f64) -> usize {
    let r = libm::round(x);
    if (x - r).abs() < 1e-9 {
        r as usize
    } else {
        libm::ceil(x) as usize
    }
}

/// Uniform subsample of `⌈fraction·|train|⌉` graphs without replacement,
/// original order preserved.
pub fn subsample_training(train: &GraphDataset, fraction: f64, seed: u64) -> Result<GraphDataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidFraction(fraction));
    }
    let m = ceil_tolerant(fraction * train.len() as f64).min(train.len());
    if m == 0 {
        return Err(Error::EmptyResult);
    }
    if m == train.len() {
        return Ok(train.clone());
    }
    let mut picked = SeedRng::new(seed).sample_indices(train.len(), m);
    picked.sort_unstable();
    train.subset(&picked)
}

/// Number of anomalies `m` with `m / (n + m) >= rate`, the smallest such `m`.
pub fn contamination_count(normals: usize, rate: f64) -> usize {
    if rate <= 0.0 {
        return 0;
    }
    ceil_tolerant(rate * normals as f64 / (1.0 - rate))
}

/// Appends anomalies drawn without replacement from `anomaly_pool` so that
/// they make up `rate` of the result. Training never reads labels, so the
/// injected graphs are unlabeled as far as the model is concerned; the
/// returned dataset still records them as anomalous for bookkeeping.
pub fn inject_contamination(
    train_normals: &GraphDataset,
    anomaly_pool: &[Graph],
    rate: f64,
    seed: u64,
) -> Result<GraphDataset> {
    if !(0.0..=0.5).contains(&rate) {
        return Err(Error::InvalidRate(rate));
    }
    let m = contamination_count(train_normals.len(), rate);
    if m == 0 {
        return Ok(train_normals.clone());
    }
    if m > anomaly_pool.len() {
        return Err(Error::PoolTooSmall {
            needed: m,
            available: anomaly_pool.len(),
        });
    }
    let picked = SeedRng::new(seed).sample_indices(anomaly_pool.len(), m);
    let mut graphs = train_normals.graphs().to_vec();
    let mut classes = train_normals.classes().to_vec();
    let mut labels = train_normals.labels().to_vec();
    for i in picked {
        graphs.push(anomaly_pool[i].clone());
        classes.push(-1);
        labels.push(true);
    }
    GraphDataset::new(
        train_normals.name(),
        train_normals.feature_kind(),
        graphs,
        classes,
    )?
    .with_labels(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn plain(classes: &[i64]) -> GraphDataset {
        let graphs = classes
            .iter()
            .enumerate()
            .map(|(i, _)| Graph::new(1 + i % 3, [], None).unwrap())
            .collect();
        GraphDataset::new("t", FeatureKind::DegreeOneHot, graphs, classes.to_vec()).unwrap()
    }

    fn labeled(normals: usize, anomalies: usize) -> GraphDataset {
        let mut classes = vec![0; normals];
        classes.extend(vec![1; anomalies]);
        let labels = classes.iter().map(|&c| c == 1).collect();
        plain(&classes).with_labels(labels).unwrap()
    }

    #[test]
    fn minority_becomes_anomalous() {
        let ds = to_anomaly_labels(&plain(&[0, 0, 0, 1]), None).unwrap();
        assert_eq!(ds.labels(), &[false, false, false, true]);
        assert!(ds.is_labeled());
    }

    #[test]
    fn explicit_anomaly_class() {
        let ds = to_anomaly_labels(&plain(&[2, 2, 1, 1, 1]), Some(2)).unwrap();
        assert_eq!(ds.labels(), &[true, true, false, false, false]);
        assert_eq!(
            to_anomaly_labels(&plain(&[2, 1]), Some(7)),
            Err(Error::UnknownClassId(7))
        );
    }

    #[test]
    fn tie_goes_to_smallest_class() {
        let ds = to_anomaly_labels(&plain(&[0, 0, 1, 1]), None).unwrap();
        assert_eq!(ds.labels(), &[true, true, false, false]);
    }

    #[test]
    fn relabelling_keeps_structure() {
        let base = plain(&[3, 1, 3, 2, 3]);
        let ds = to_anomaly_labels(&base, None).unwrap();
        assert_eq!(ds.graphs(), base.graphs());
        assert_eq!(ds.classes(), base.classes());
    }

    #[test]
    fn attributed_dims_must_agree() {
        use crate::matrix::Matrix;
        let a = Graph::new(1, [], Some(Matrix::zeros(1, 2))).unwrap();
        let b = Graph::new(1, [], Some(Matrix::zeros(1, 3))).unwrap();
        assert!(matches!(
            GraphDataset::new("x", FeatureKind::Attributed, vec![a.clone(), b], vec![0, 0]),
            Err(Error::FeatureDimMismatch { expected: 2, found: 3 })
        ));
        assert_eq!(
            GraphDataset::new("x", FeatureKind::DegreeOneHot, vec![a], vec![0]),
            Err(Error::FeatureKindMismatch(0))
        );
    }

    #[test]
    fn folds_stratify_anomalies() {
        let ds = labeled(8, 2);
        let plan = stratified_kfold(&ds, 5, 42).unwrap();
        let mut anomaly_folds = Vec::new();
        for f in 0..5 {
            let test = plan.test_indices(f);
            assert_eq!(test.len(), 2);
            anomaly_folds.extend(test.iter().filter(|&&i| ds.labels()[i]).map(|_| f));
        }
        anomaly_folds.dedup();
        assert_eq!(anomaly_folds.len(), 2);
        assert_eq!(plan, stratified_kfold(&ds, 5, 42).unwrap());
    }

    #[test]
    fn fold_errors() {
        let ds = labeled(3, 1);
        assert!(matches!(
            stratified_kfold(&ds, 5, 0),
            Err(Error::FoldCountTooLarge { k: 5, n: 4 })
        ));
        assert!(stratified_kfold(&ds, 1, 0).is_err());
    }

    #[test]
    fn fold_proportions_over_many_seeds() {
        let ds = labeled(37, 6);
        let k = 5;
        for seed in 0..100 {
            let plan = stratified_kfold(&ds, k, seed).unwrap();
            let mut seen = vec![0usize; ds.len()];
            for f in 0..k {
                let test = plan.test_indices(f);
                let anomalies = test.iter().filter(|&&i| ds.labels()[i]).count() as f64;
                let normals = test.len() as f64 - anomalies;
                // Expected per-fold counts from the global proportions.
                assert!((anomalies - 6.0 / k as f64).abs() <= 1.0);
                assert!((normals - 37.0 / k as f64).abs() <= 1.0);
                for i in test {
                    seen[i] += 1;
                }
                let train = plan.train_indices(f, ds.labels(), false);
                assert!(train.iter().all(|&i| !ds.labels()[i] && plan.assignments[i] != f));
            }
            assert!(seen.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn subsample_rules() {
        let ds = labeled(100, 0);
        assert_eq!(subsample_training(&ds, 1.0, 3).unwrap(), ds);
        assert_eq!(subsample_training(&ds, 0.05, 3).unwrap().len(), 5);
        assert_eq!(subsample_training(&ds, 0.25, 3).unwrap().len(), 25);
        let a = subsample_training(&ds, 0.5, 9).unwrap();
        assert_eq!(a, subsample_training(&ds, 0.5, 9).unwrap());
        assert_eq!(a.len(), 50);
        assert!(matches!(
            subsample_training(&ds, 0.0, 9),
            Err(Error::InvalidFraction(_))
        ));
        let empty = GraphDataset::new("e", FeatureKind::DegreeOneHot, vec![], vec![]).unwrap();
        assert_eq!(subsample_training(&empty, 0.5, 1), Err(Error::EmptyResult));
    }

    #[test]
    fn contamination_counts() {
        // m / (84 + m) = 0.16 has the exact solution m = 16.
        assert_eq!(contamination_count(84, 0.16), 16);
        assert_eq!(contamination_count(84, 0.0), 0);
        assert_eq!(contamination_count(144, 0.16), 28);
        let normals = labeled(84, 0);
        let pool: Vec<Graph> = (0..20).map(|_| Graph::new(4, [(0, 1)], None).unwrap()).collect();
        let out = inject_contamination(&normals, &pool, 0.16, 5).unwrap();
        assert_eq!(out.len(), 100);
        assert_eq!(out.anomaly_count(), 16);
        assert_eq!(inject_contamination(&normals, &pool, 0.0, 5).unwrap(), normals);
    }

    #[test]
    fn contamination_capacity() {
        let normals = labeled(99, 0);
        let pool = vec![Graph::new(2, [], None).unwrap()];
        assert_eq!(
            inject_contamination(&normals, &pool, 0.5, 1),
            Err(Error::PoolTooSmall {
                needed: 99,
                available: 1
            })
        );
        assert!(matches!(
            inject_contamination(&normals, &pool, 0.6, 1),
            Err(Error::InvalidRate(_))
        ));
    }
}
