//! Dense K-layer GCN with max-pool READOUT and hand-written reverse mode.
//!
//! Layer `l` computes `H^{l+1} = ReLU(Ã · H^l · W^l + b^l)` with `H^0 = X`.
//! The graph representation is the coordinatewise maximum over the rows of
//! the last layer.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NormAdj;
use crate::matrix::Matrix;
use crate::rng::SeedRng;

/// Hidden 512, hidden 512, output 256.
pub const DEFAULT_LAYER_DIMS: [usize; 3] = [512, 512, 256];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GcnArch {
    pub input_dim: usize,
    pub layer_dims: Vec<usize>,
}

impl GcnArch {
    pub fn new(input_dim: usize, layer_dims: Vec<usize>) -> Result<Self> {
        if input_dim == 0 || layer_dims.is_empty() || layer_dims.contains(&0) {
            return Err(Error::ShapeMismatch(alloc::format!(
                "architecture needs input_dim >= 1 and at least one layer of width >= 1, got {input_dim} -> {layer_dims:?}"
            )));
        }
        Ok(Self {
            input_dim,
            layer_dims,
        })
    }

    pub fn depth(&self) -> usize {
        self.layer_dims.len()
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().expect("validated arch has layers")
    }

    /// `(fan_in, fan_out)` per layer.
    pub fn layer_shapes(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        core::iter::once(self.input_dim)
            .chain(self.layer_dims.iter().copied())
            .zip(self.layer_dims.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `fan_in x fan_out`, row-major.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

/// Weights and biases for every layer; also used for gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnParams {
    pub layers: Vec<Layer>,
}

impl GcnParams {
    pub fn zeros(arch: &GcnArch) -> Self {
        Self {
            layers: arch
                .layer_shapes()
                .map(|(i, o)| Layer {
                    weight: Matrix::zeros(i, o),
                    bias: vec![0.0; o],
                })
                .collect(),
        }
    }

    pub fn arch(&self) -> GcnArch {
        GcnArch {
            input_dim: self.layers.first().map_or(0, |l| l.weight.rows()),
            layer_dims: self.layers.iter().map(|l| l.weight.cols()).collect(),
        }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weight.is_finite() && l.bias.iter().all(|b| b.is_finite()))
    }

    /// `self += alpha * other`. Shapes must agree.
    pub fn add_scaled(&mut self, alpha: f64, other: &GcnParams) {
        assert_eq!(self.depth(), other.depth(), "layer count");
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            a.weight.add_scaled(alpha, &b.weight);
            crate::matrix::axpy(&mut a.bias, alpha, &b.bias);
        }
    }

    pub fn same_shape(&self, other: &GcnParams) -> bool {
        self.depth() == other.depth()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.weight.shape() == b.weight.shape() && a.bias.len() == b.bias.len()
            })
    }

    /// Flat view over every scalar, layer by layer, weights then bias.
    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weight.as_slice().iter().chain(l.bias.iter()))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.as_mut_slice().iter_mut().chain(l.bias.iter_mut()))
    }
}

/// Kaiming-uniform weights on `(-b, b)` with `b = sqrt(6 / fan_in)`, zero biases.
pub fn init_params(arch: &GcnArch, seed: u64) -> GcnParams {
    let mut rng = SeedRng::new(seed);
    let mut params = GcnParams::zeros(arch);
    for layer in &mut params.layers {
        let bound = libm::sqrt(6.0 / layer.weight.rows() as f64);
        for w in layer.weight.as_mut_slice() {
            *w = rng.uniform_in(-bound, bound);
        }
    }
    params
}

/// Everything the backward pass needs from one forward evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    input: Matrix,
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
    graph_repr: Vec<f64>,
    argmax: Vec<usize>,
}

impl ForwardCache {
    pub fn input(&self) -> &Matrix {
        &self.input
    }

    /// Pre-activation of layer `l`.
    pub fn pre(&self, l: usize) -> &Matrix {
        &self.pre[l]
    }

    /// Post-activation of layer `l`.
    pub fn post(&self, l: usize) -> &Matrix {
        &self.post[l]
    }

    pub fn depth(&self) -> usize {
        self.post.len()
    }

    /// Final node representations, one row per node.
    pub fn node_repr(&self) -> &Matrix {
        self.post.last().expect("at least one layer")
    }

    pub fn graph_repr(&self) -> &[f64] {
        &self.graph_repr
    }

    /// Row that supplied each coordinate of the graph representation.
    pub fn argmax(&self) -> &[usize] {
        &self.argmax
    }
}

pub fn gcn_forward(params: &GcnParams, adj: &NormAdj, x: &Matrix) -> Result<ForwardCache> {
    let n = adj.len();
    let input_dim = params.layers.first().map_or(0, |l| l.weight.rows());
    if x.rows() != n || x.cols() != input_dim {
        return Err(Error::ShapeMismatch(alloc::format!(
            "features are {}x{}, expected {n}x{input_dim}",
            x.rows(),
            x.cols()
        )));
    }
    if n == 0 || params.layers.is_empty() {
        return Err(Error::ShapeMismatch("empty graph or network".into()));
    }
    let mut pre = Vec::with_capacity(params.depth());
    let mut post: Vec<Matrix> = Vec::with_capacity(params.depth());
    for layer in &params.layers {
        let h = post.last().unwrap_or(x);
        let mut z = adj.matrix().matmul(&h.matmul(&layer.weight));
        z.add_row_vector(&layer.bias);
        post.push(z.map(relu));
        pre.push(z);
    }
    let (graph_repr, argmax) = readout_max(post.last().expect("nonempty"));
    Ok(ForwardCache {
        input: x.clone(),
        pre,
        post,
        graph_repr,
        argmax,
    })
}

#[inline]
fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Coordinatewise max over rows and the winning row per coordinate
/// (first occurrence on ties).
pub fn readout_max(h: &Matrix) -> (Vec<f64>, Vec<usize>) {
    assert!(h.rows() > 0, "readout of an empty node set");
    let mut best = h.row(0).to_vec();
    let mut arg = vec![0; h.cols()];
    for i in 1..h.rows() {
        for (d, &v) in h.row(i).iter().enumerate() {
            if v > best[d] {
                best[d] = v;
                arg[d] = i;
            }
        }
    }
    (best, arg)
}

/// Gradients of a scalar loss w.r.t. every weight and bias, given the loss's
/// cotangents for the graph representation (`grad_graph`, length k) and the
/// final node representations (`grad_nodes`, N x k). `Ã` is a constant.
pub fn gcn_backward(
    params: &GcnParams,
    adj: &NormAdj,
    cache: &ForwardCache,
    grad_graph: &[f64],
    grad_nodes: &Matrix,
) -> Result<GcnParams> {
    let depth = params.depth();
    if cache.depth() != depth
        || grad_graph.len() != cache.graph_repr.len()
        || grad_nodes.shape() != cache.node_repr().shape()
        || adj.len() != cache.input.rows()
        || params
            .layers
            .iter()
            .zip(&cache.pre)
            .any(|(l, z)| l.weight.cols() != z.cols())
    {
        return Err(Error::CacheMismatch);
    }

    let mut grads: Vec<Layer> = Vec::with_capacity(depth);
    // Cotangent of the current layer's output H^{l+1}.
    let mut g = grad_nodes.clone();
    for (d, (&row, &dg)) in cache.argmax.iter().zip(grad_graph).enumerate() {
        g[(row, d)] += dg;
    }
    for l in (0..depth).rev() {
        let z = &cache.pre[l];
        let mut dz = g;
        for (gz, &zv) in dz.as_mut_slice().iter_mut().zip(z.as_slice()) {
            if zv <= 0.0 {
                *gz = 0.0;
            }
        }
        let bias = dz.column_sums();
        let m = adj.matrix().matmul(&dz);
        let h_prev = if l == 0 { &cache.input } else { &cache.post[l - 1] };
        let weight = h_prev.t_matmul(&m);
        g = if l > 0 {
            m.matmul_t(&params.layers[l].weight)
        } else {
            Matrix::zeros(0, 0)
        };
        grads.push(Layer { weight, bias });
    }
    grads.reverse();
    Ok(GcnParams { layers: grads })
}
