//! Adam with bias correction over [`GcnParams`]-shaped tensors.

use crate::error::{Error, Result};
use crate::gcn::{GcnArch, GcnParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub m: GcnParams,
    pub v: GcnParams,
    pub t: u64,
}

impl AdamState {
    pub fn new(arch: &GcnArch) -> Self {
        Self::with_config(arch, AdamConfig::default())
    }

    pub fn with_config(arch: &GcnArch, config: AdamConfig) -> Self {
        Self {
            config,
            m: GcnParams::zeros(arch),
            v: GcnParams::zeros(arch),
            t: 0,
        }
    }
}

/// One Adam update of `params` in place. Non-finite gradients abort the step
/// before anything is modified.
pub fn adam_step(
    state: &mut AdamState,
    params: &mut GcnParams,
    grads: &GcnParams,
    lr: f64,
) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidLearningRate(lr));
    }
    if !params.same_shape(grads) || !params.same_shape(&state.m) {
        return Err(Error::ShapeMismatch("adam: params, grads and moments differ".into()));
    }
    if let Some(layer) = grads
        .layers
        .iter()
        .position(|l| !l.weight.is_finite() || l.bias.iter().any(|b| !b.is_finite()))
    {
        return Err(Error::NonFiniteGradient { layer });
    }

    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as f64;
    let correction1 = 1.0 - libm::pow(beta1, t);
    let correction2 = 1.0 - libm::pow(beta2, t);
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads.iter())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / correction1;
        let v_hat = *v / correction2;
        *p -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
    Ok(())
}
