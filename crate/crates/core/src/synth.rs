//! Synthetic labelled corpora with known local and global anomalies.
//!
//! Normal graphs are random recursive trees. With `feature_dim > 0` every node
//! picks one of `node_types` shared prototypes and adds Gaussian noise of scale
//! `noise_sigma`.
//!
//! * Local anomaly: a normal tree in which a few nodes deviate. Attributed
//!   corpora move `outlier_nodes` rows to `prototype ± outlier_sigmas·noise_sigma`
//!   in every coordinate; plain corpora attach a clique on `motif_size` nodes.
//! * Global anomaly: a near-clique (density `clique_density`) with normal
//!   node rows, i.e. every node looks ordinary but the whole graph does not.
//!
//! Class ids are 0 (normal), 1 (local) and 2 (global).

use alloc::string::String;
use alloc::vec::Vec;

use crate::dataset::{FeatureKind, GraphDataset};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::rng::SeedRng;

pub const CLASS_NORMAL: i64 = 0;
pub const CLASS_LOCAL: i64 = 1;
pub const CLASS_GLOBAL: i64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub name: String,
    pub normal: usize,
    pub local_anomalies: usize,
    pub global_anomalies: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    /// 0 builds plain graphs (degree features).
    pub feature_dim: usize,
    pub node_types: usize,
    pub noise_sigma: f64,
    /// Nodes per local anomaly that receive outlying features.
    pub outlier_nodes: usize,
    pub outlier_sigmas: f64,
    pub clique_density: f64,
    pub motif_size: usize,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            normal: 180,
            local_anomalies: 0,
            global_anomalies: 20,
            min_nodes: 10,
            max_nodes: 20,
            feature_dim: 8,
            node_types: 4,
            noise_sigma: 0.1,
            outlier_nodes: 1,
            outlier_sigmas: 10.0,
            clique_density: 0.9,
            motif_size: 5,
        }
    }
}

impl SynthSpec {
    /// 180 normal trees and 20 near-cliques, structure only.
    pub fn global_corpus() -> Self {
        Self {
            name: "synthetic-global".into(),
            feature_dim: 0,
            ..Self::default()
        }
    }

    /// 180 normal trees and 20 trees carrying a 6-clique, structure only.
    pub fn local_corpus() -> Self {
        Self {
            name: "synthetic-local".into(),
            local_anomalies: 20,
            global_anomalies: 0,
            feature_dim: 0,
            motif_size: 6,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidSpec(m.into()));
        if self.normal == 0 {
            return fail("at least one normal graph is required");
        }
        if self.min_nodes < 2 || self.min_nodes > self.max_nodes {
            return fail("need 2 <= min_nodes <= max_nodes");
        }
        if self.feature_dim > 0 && self.local_anomalies > 0 && self.outlier_nodes == 0 {
            return fail("outlier_nodes must be >= 1");
        }
        if !(self.outlier_sigmas > 0.0 && self.outlier_sigmas.is_finite()) {
            return fail("outlier_sigmas must be positive");
        }
        if self.feature_dim > 0 && self.node_types == 0 {
            return fail("node_types must be >= 1 for attributed corpora");
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be positive");
        }
        if !(self.clique_density > 0.8 && self.clique_density <= 1.0) {
            return fail("clique_density must lie in (0.8, 1]");
        }
        if self.feature_dim == 0
            && self.local_anomalies > 0
            && (self.motif_size < 3 || self.motif_size > self.min_nodes)
        {
            return fail("motif_size must lie in [3, min_nodes] for plain local anomalies");
        }
        Ok(())
    }

    pub fn feature_kind(&self) -> FeatureKind {
        if self.feature_dim == 0 {
            FeatureKind::DegreeOneHot
        } else {
            FeatureKind::Attributed
        }
    }
}

struct Generator<'a> {
    spec: &'a SynthSpec,
    rng: SeedRng,
    prototypes: Vec<Vec<f64>>,
}

impl Generator<'_> {
    fn size(&mut self) -> usize {
        self.spec.min_nodes + self.rng.below(self.spec.max_nodes - self.spec.min_nodes + 1)
    }

    /// Random recursive tree: node `i` attaches to a uniform earlier node.
    fn tree_edges(&mut self, n: usize) -> Vec<(usize, usize)> {
        (1..n).map(|i| (self.rng.below(i), i)).collect()
    }

    fn near_clique_edges(&mut self, n: usize) -> Vec<(usize, usize)> {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let drop = libm::floor((1.0 - self.spec.clique_density) * all.len() as f64) as usize;
        self.rng.shuffle(&mut all);
        all.truncate(all.len() - drop);
        all
    }

    /// Feature rows and the prototype index of each node.
    fn normal_features(&mut self, n: usize) -> (Option<Matrix>, Vec<usize>) {
        let d = self.spec.feature_dim;
        if d == 0 {
            return (None, Vec::new());
        }
        let mut x = Matrix::zeros(n, d);
        let mut types = Vec::with_capacity(n);
        for i in 0..n {
            let t = self.rng.below(self.prototypes.len());
            for j in 0..d {
                x[(i, j)] = self.prototypes[t][j] + self.spec.noise_sigma * self.rng.standard_normal();
            }
            types.push(t);
        }
        (Some(x), types)
    }

    fn normal(&mut self) -> Result<Graph> {
        let n = self.size();
        let edges = self.tree_edges(n);
        let (x, _) = self.normal_features(n);
        Graph::new(n, edges, x)
    }

    fn local(&mut self) -> Result<Graph> {
        let n = self.size();
        let mut edges = self.tree_edges(n);
        let (mut x, types) = self.normal_features(n);
        match &mut x {
            Some(x) => {
                let shift = self.spec.outlier_sigmas * self.spec.noise_sigma;
                for victim in self.rng.sample_indices(n, self.spec.outlier_nodes.min(n)) {
                    for j in 0..self.spec.feature_dim {
                        let sign = if self.rng.bernoulli(0.5) { 1.0 } else { -1.0 };
                        x[(victim, j)] = self.prototypes[types[victim]][j] + sign * shift;
                    }
                }
            }
            None => {
                let members = self.rng.sample_indices(n, self.spec.motif_size);
                for (a, &u) in members.iter().enumerate() {
                    for &v in &members[a + 1..] {
                        edges.push((u, v));
                    }
                }
            }
        }
        Graph::new(n, edges, x)
    }

    fn global(&mut self) -> Result<Graph> {
        let n = self.size();
        let edges = self.near_clique_edges(n);
        let (x, _) = self.normal_features(n);
        Graph::new(n, edges, x)
    }
}

/// Labelled corpus: normals first, then local, then global anomalies.
pub fn synth_corpus(spec: &SynthSpec, seed: u64) -> Result<GraphDataset> {
    spec.validate()?;
    let mut rng = SeedRng::new(seed);
    let prototypes = draw_prototypes(&mut rng, spec);
    let mut gen = Generator {
        spec,
        rng,
        prototypes,
    };
    let total = spec.normal + spec.local_anomalies + spec.global_anomalies;
    let mut graphs = Vec::with_capacity(total);
    let mut classes = Vec::with_capacity(total);
    for _ in 0..spec.normal {
        graphs.push(gen.normal()?);
        classes.push(CLASS_NORMAL);
    }
    for _ in 0..spec.local_anomalies {
        graphs.push(gen.local()?);
        classes.push(CLASS_LOCAL);
    }
    for _ in 0..spec.global_anomalies {
        graphs.push(gen.global()?);
        classes.push(CLASS_GLOBAL);
    }
    let labels = classes.iter().map(|&c| c != CLASS_NORMAL).collect();
    GraphDataset::new(spec.name.clone(), spec.feature_kind(), graphs, classes)?.with_labels(labels)
}

/// The prototype rows a corpus generated with `spec` and `seed` was built around.
pub fn prototypes(spec: &SynthSpec, seed: u64) -> Vec<Vec<f64>> {
    draw_prototypes(&mut SeedRng::new(seed), spec)
}

fn draw_prototypes(rng: &mut SeedRng, spec: &SynthSpec) -> Vec<Vec<f64>> {
    if spec.feature_dim == 0 {
        return Vec::new();
    }
    (0..spec.node_types).map(|_| draw_prototype(rng, spec.feature_dim)).collect()
}

fn draw_prototype(rng: &mut SeedRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect()
}
