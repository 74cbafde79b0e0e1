//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use glocalkd_core::gcn::GcnParams;
use glocalkd_core::{auc, build_graph, gcn_backward, gcn_forward, normalized_adjacency, Graph, Matrix, SeedRng};

/// Layer recurrence evaluated node by node straight from the edge list:
/// `h_i' = ReLU(b + Σ_{j ∈ N(i) ∪ {i}} (h_j W) / sqrt(d̃_i d̃_j))`.
/// Returns the final node rows and their coordinatewise max.
pub fn naive_forward(params: &GcnParams, g: &Graph, x: &Matrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = g.num_nodes();
    let mut neighbours: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(a, b) in g.edges() {
        neighbours[a].push(b);
        neighbours[b].push(a);
    }
    let d_tilde: Vec<f64> = neighbours.iter().map(|nb| nb.len() as f64).collect();
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| x.row(i).to_vec()).collect();
    for layer in &params.layers {
        let (fan_in, fan_out) = layer.weight.shape();
        let mut next = vec![vec![0.0; fan_out]; n];
        for i in 0..n {
            for d in 0..fan_out {
                let mut z = layer.bias[d];
                for &j in &neighbours[i] {
                    let coeff = 1.0 / (d_tilde[i] * d_tilde[j]).sqrt();
                    let mut hw = 0.0;
                    for k in 0..fan_in {
                        hw += h[j][k] * layer.weight[(k, d)];
                    }
                    z += coeff * hw;
                }
                next[i][d] = z.max(0.0);
            }
        }
        h = next;
    }
    let width = h[0].len();
    let pooled = (0..width)
        .map(|d| h.iter().map(|row| row[d]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    (h, pooled)
}

/// AUC by comparing every (anomaly, normal) pair; ties count one half.
pub fn pairwise_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins2 = 0u64;
    let mut pairs = 0u64;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1;
            if scores[i] > scores[j] {
                wins2 += 2;
            } else if scores[i] == scores[j] {
                wins2 += 1;
            }
        }
    }
    wins2 as f64 / (2 * pairs) as f64
}

/// Random simple graph with `n` nodes and edge probability `p`.
pub fn random_graph(rng: &mut SeedRng, n: usize, p: f64, feature_dim: usize) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.bernoulli(p) {
                edges.push((i, j));
            }
        }
    }
    let x = Matrix::from_vec(
        n,
        feature_dim,
        (0..n * feature_dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect(),
    );
    build_graph(n, &edges, Some(x)).unwrap()
}

/// Parameters with every entry drawn from U(-scale, scale), biases included.
pub fn random_params(rng: &mut SeedRng, input_dim: usize, dims: &[usize], scale: f64) -> GcnParams {
    let arch = glocalkd_core::GcnArch::new(input_dim, dims.to_vec()).unwrap();
    let mut p = GcnParams::zeros(&arch);
    for v in p.iter_mut() {
        *v = rng.uniform_in(-scale, scale);
    }
    p
}

/// Joint distillation loss of one graph against fixed target outputs.
fn joint_loss(params: &GcnParams, g: &Graph, target_nodes: &Matrix, target_graph: &[f64]) -> f64 {
    let adj = normalized_adjacency(g);
    let cache = gcn_forward(params, &adj, g.features().unwrap()).unwrap();
    let graph: f64 = cache
        .graph_repr()
        .iter()
        .zip(target_graph)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let node: f64 = cache
        .node_repr()
        .as_slice()
        .iter()
        .zip(target_nodes.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / g.num_nodes() as f64;
    graph + node
}

fn analytic(params: &GcnParams, g: &Graph, target_nodes: &Matrix, target_graph: &[f64]) -> GcnParams {
    let adj = normalized_adjacency(g);
    let cache = gcn_forward(params, &adj, g.features().unwrap()).unwrap();
    let grad_graph: Vec<f64> = cache
        .graph_repr()
        .iter()
        .zip(target_graph)
        .map(|(a, b)| 2.0 * (a - b))
        .collect();
    let n = g.num_nodes() as f64;
    let mut grad_nodes = cache.node_repr().clone();
    for (v, t) in grad_nodes.as_mut_slice().iter_mut().zip(target_nodes.as_slice()) {
        *v = 2.0 * (*v - t) / n;
    }
    gcn_backward(params, &adj, &cache, &grad_graph, &grad_nodes).unwrap()
}

/// Largest relative error over coordinates whose finite difference exceeds 1e-8.
pub fn worst_relative_error(seed: u64) -> (f64, usize) {
    let mut rng = SeedRng::new(seed);
    let n = 2 + rng.below(7);
    let feat = 1 + rng.below(4);
    let dims: Vec<usize> = (0..3).map(|_| 1 + rng.below(8)).collect();
    let g = random_graph(&mut rng, n, 0.4, feat);
    let params = random_params(&mut rng, feat, &dims, 1.0);
    let out = *dims.last().unwrap();
    let target_nodes = Matrix::from_vec(n, out, (0..n * out).map(|_| rng.uniform_in(-1.0, 1.0)).collect());
    let target_graph: Vec<f64> = (0..out).map(|_| rng.uniform_in(-1.0, 1.0)).collect();

    let grads = analytic(&params, &g, &target_nodes, &target_graph);
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (idx, &a) in grads.iter().enumerate() {
        let mut plus = params.clone();
        *plus.iter_mut().nth(idx).unwrap() += eps;
        let mut minus = params.clone();
        *minus.iter_mut().nth(idx).unwrap() -= eps;
        let fd = (joint_loss(&plus, &g, &target_nodes, &target_graph)
            - joint_loss(&minus, &g, &target_nodes, &target_graph))
            / (2.0 * eps);
        if fd.abs() > 1e-8 {
            checked += 1;
            worst = worst.max((a - fd).abs() / a.abs().max(fd.abs()));
        }
    }
    (worst, checked)
}

/// Largest absolute gap between `gcn_forward` and [`naive_forward`] over
/// `instances` random graphs (N <= 8, input width <= 4, three layers <= 8).
pub fn worst_forward_gap(seed: u64, instances: usize) -> f64 {
    let mut rng = SeedRng::new(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..instances {
        let n = 1 + rng.below(8);
        let feat = 1 + rng.below(4);
        let dims: Vec<usize> = (0..3).map(|_| 1 + rng.below(8)).collect();
        let g = random_graph(&mut rng, n, 0.5, feat);
        let params = random_params(&mut rng, feat, &dims, 1.0);
        let cache = gcn_forward(&params, &normalized_adjacency(&g), g.features().unwrap()).unwrap();
        let (nodes, pooled) = naive_forward(&params, &g, g.features().unwrap());
        for (i, row) in nodes.iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                worst = worst.max((cache.node_repr()[(i, d)] - v).abs());
            }
        }
        for (a, b) in cache.graph_repr().iter().zip(&pooled) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Number of random score/label vectors (out of `vectors`) on which the
/// rank AUC differs from pair counting. Scores are coarse so ties are common.
pub fn auc_mismatches(seed: u64, vectors: usize) -> usize {
    let mut rng = SeedRng::new(seed);
    let mut done = 0;
    let mut bad = 0;
    while done < vectors {
        let n = 2 + rng.below(60);
        let levels = 1 + rng.below(10);
        let scores: Vec<f64> = (0..n).map(|_| rng.below(levels) as f64 * 0.1).collect();
        let labels: Vec<bool> = (0..n).map(|_| rng.bernoulli(0.3)).collect();
        if labels.iter().all(|&l| l) || labels.iter().all(|&l| !l) {
            continue;
        }
        if auc(&scores, &labels).unwrap() != pairwise_auc(&scores, &labels) {
            bad += 1;
        }
        done += 1;
    }
    bad
}
