//! Undirected, unweighted graphs and their GCN preprocessing.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// An undirected simple graph with optional node features.
///
/// Edges are stored once as `(i, j)` with `i < j`, sorted. Self-loops are
/// never stored; they are added only inside [`normalized_adjacency`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<(usize, usize)>,
    features: Option<Matrix>,
}

impl Graph {
    pub fn new(
        num_nodes: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        features: Option<Matrix>,
    ) -> Result<Self> {
        if num_nodes == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut canonical = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_nodes || b >= num_nodes {
                return Err(Error::OutOfRangeEndpoint(a, b, num_nodes));
            }
            if a == b {
                return Err(Error::SelfLoopRejected(a));
            }
            canonical.insert((a.min(b), a.max(b)));
        }
        if let Some(x) = &features {
            if x.rows() != num_nodes || x.cols() == 0 {
                return Err(Error::FeatureShapeMismatch {
                    rows: x.rows(),
                    cols: x.cols(),
                    expected_rows: num_nodes,
                });
            }
        }
        Ok(Self {
            num_nodes,
            edges: canonical.into_iter().collect(),
            features,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn features(&self) -> Option<&Matrix> {
        self.features.as_ref()
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.features.as_ref().map(Matrix::cols)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = alloc::vec![0; self.num_nodes];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn max_degree(&self) -> usize {
        self.degrees().into_iter().max().unwrap_or(0)
    }

    /// Edge density `|E| / (N (N - 1) / 2)`; 0 for a single node.
    pub fn density(&self) -> f64 {
        let n = self.num_nodes as f64;
        if self.num_nodes < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1.0) / 2.0)
    }

    /// The same graph with node `i` renamed to `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Self> {
        assert_eq!(perm.len(), self.num_nodes, "permutation length");
        let edges = self.edges.iter().map(|&(a, b)| (perm[a], perm[b]));
        let features = self.features.as_ref().map(|x| {
            let mut inverse = alloc::vec![0; perm.len()];
            for (i, &p) in perm.iter().enumerate() {
                inverse[p] = i;
            }
            x.permute_rows(&inverse)
        });
        Self::new(self.num_nodes, edges, features)
    }

    /// The same structure with a different feature matrix.
    pub fn with_features(&self, features: Option<Matrix>) -> Result<Self> {
        Self::new(self.num_nodes, self.edges.iter().copied(), features)
    }
}

/// Validating constructor: deduplicates symmetric pairs, rejects self-loops
/// and out-of-range endpoints, checks the feature row count.
pub fn build_graph(
    num_nodes: usize,
    edges: &[(usize, usize)],
    features: Option<Matrix>,
) -> Result<Graph> {
    Graph::new(num_nodes, edges.iter().copied(), features)
}

/// Dense `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃ = D + I`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormAdj(Matrix);

impl NormAdj {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.rows() == 0
    }
}

pub fn normalized_adjacency(g: &Graph) -> NormAdj {
    let n = g.num_nodes();
    let d_tilde: Vec<f64> = g.degrees().into_iter().map(|d| (d + 1) as f64).collect();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0 / d_tilde[i];
    }
    for &(a, b) in g.edges() {
        let w = 1.0 / libm::sqrt(d_tilde[a] * d_tilde[b]);
        m[(a, b)] = w;
        m[(b, a)] = w;
    }
    NormAdj(m)
}

/// One-hot degree encoding, degrees above `max_degree` land in the last bucket.
pub fn degree_features(g: &Graph, max_degree: usize) -> Matrix {
    let mut x = Matrix::zeros(g.num_nodes(), max_degree + 1);
    for (i, d) in g.degrees().into_iter().enumerate() {
        x[(i, d.min(max_degree))] = 1.0;
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    #[test]
    fn minimal_graph() {
        let g = build_graph(1, &[], None).unwrap();
        assert_eq!(g.num_nodes(), 1);
        assert!(g.edges().is_empty());
    }

    #[test]
    fn symmetric_pair_deduplicated() {
        let g = build_graph(3, &[(0, 1), (1, 0), (1, 2)], None).unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(
            build_graph(2, &[(0, 2)], None),
            Err(Error::OutOfRangeEndpoint(0, 2, 2))
        );
        assert_eq!(build_graph(2, &[(1, 1)], None), Err(Error::SelfLoopRejected(1)));
        assert_eq!(build_graph(0, &[], None), Err(Error::EmptyGraph));
        assert!(matches!(
            build_graph(2, &[], Some(Matrix::zeros(3, 2))),
            Err(Error::FeatureShapeMismatch { .. })
        ));
    }

    #[test]
    fn single_node_adjacency() {
        let g = build_graph(1, &[], None).unwrap();
        assert_eq!(normalized_adjacency(&g).matrix().as_slice(), &[1.0]);
    }

    #[test]
    fn single_edge_adjacency() {
        let g = build_graph(2, &[(0, 1)], None).unwrap();
        assert_eq!(normalized_adjacency(&g).matrix().as_slice(), &[0.5; 4]);
    }

    /// Dense oracle: build A + I and D̃ explicitly, then divide entrywise.
    fn dense_oracle(g: &Graph) -> Matrix {
        let n = g.num_nodes();
        let mut a = Matrix::identity(n);
        for &(i, j) in g.edges() {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        let dt: Vec<f64> = (0..n).map(|i| a.row(i).iter().sum()).collect();
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = a[(i, j)] / libm::sqrt(dt[i] * dt[j]);
            }
        }
        out
    }

    #[test]
    fn path_graph_matches_dense_oracle() {
        let g = build_graph(3, &[(0, 1), (1, 2)], None).unwrap();
        let got = normalized_adjacency(&g);
        let want = dense_oracle(&g);
        for (x, y) in got.matrix().as_slice().iter().zip(want.as_slice()) {
            assert!((x - y).abs() < 1e-15);
        }
        // Endpoints: D̃ = 2, middle: D̃ = 3.
        assert!((got.matrix()[(0, 1)] - 1.0 / libm::sqrt(6.0)).abs() < 1e-15);
        assert!((got.matrix()[(1, 1)] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn regular_graph_entries() {
        // 5-cycle: 2-regular, every nonzero entry 1/3.
        let g = build_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)], None).unwrap();
        let a = normalized_adjacency(&g);
        for i in 0..5 {
            assert!((a.matrix()[(i, i)] - 1.0 / 3.0).abs() < 1e-15);
            assert!((a.matrix()[(i, (i + 1) % 5)] - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn degree_feature_rows() {
        let star = build_graph(4, &[(0, 1), (0, 2), (0, 3)], None).unwrap();
        let x = degree_features(&star, 3);
        assert_eq!(x.row(0), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(x.row(1), &[0.0, 1.0, 0.0, 0.0]);

        let isolated = build_graph(1, &[], None).unwrap();
        assert_eq!(degree_features(&isolated, 2).row(0), &[1.0, 0.0, 0.0]);

        let hub = build_graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)], None).unwrap();
        assert_eq!(degree_features(&hub, 3).row(0), &[0.0, 0.0, 0.0, 1.0]);
    }

    fn arb_graph() -> impl Strategy<Value = Graph> {
        (1usize..9).prop_flat_map(|n| {
            let pairs = proptest::collection::vec((0..n, 0..n), 0..20);
            (Just(n), pairs).prop_map(|(n, pairs)| {
                let edges: Vec<_> = pairs.into_iter().filter(|(a, b)| a != b).collect();
                build_graph(n, &edges, None).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn adjacency_symmetric_positive_diagonal(g in arb_graph()) {
            let a = normalized_adjacency(&g);
            let m = a.matrix();
            for i in 0..g.num_nodes() {
                prop_assert!(m[(i, i)] > 0.0);
                for j in 0..g.num_nodes() {
                    prop_assert_eq!(m[(i, j)], m[(j, i)]);
                }
            }
            let oracle = dense_oracle(&g);
            for (x, y) in m.as_slice().iter().zip(oracle.as_slice()) {
                prop_assert!((x - y).abs() < 1e-14);
            }
        }

        #[test]
        fn adjacency_permutation_equivariant(g in arb_graph(), seed in any::<u64>()) {
            let n = g.num_nodes();
            let mut perm: Vec<usize> = (0..n).collect();
            crate::rng::SeedRng::new(seed).shuffle(&mut perm);
            let h = g.relabel(&perm).unwrap();
            let a = normalized_adjacency(&g);
            let b = normalized_adjacency(&h);
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(a.matrix()[(i, j)], b.matrix()[(perm[i], perm[j])]);
                }
            }
        }

        #[test]
        fn degree_rows_sum_to_one(g in arb_graph(), max_degree in 0usize..6) {
            let x = degree_features(&g, max_degree);
            for row in x.row_iter() {
                prop_assert_eq!(row.iter().sum::<f64>(), 1.0);
            }
        }
    }

    #[test]
    fn density_of_triangle() {
        let g = build_graph(3, &[(0, 1), (1, 2), (0, 2)], None).unwrap();
        assert_eq!(g.density(), 1.0);
        assert_eq!(vec![2, 2, 2], g.degrees());
    }
}
