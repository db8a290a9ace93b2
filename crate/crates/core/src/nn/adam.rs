use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
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

/// Moment estimates for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub config: AdamConfig,
}

impl AdamState {
    pub fn new(len: usize, config: AdamConfig) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            config,
        }
    }
}

/// One bias-corrected Adam update, without weight decay.
///
/// Bias correction is folded into the step size,
/// `α_t = lr·√(1−β2ᵗ)/(1−β1ᵗ)`, and `ε` is added to the uncorrected `√v`.
/// Gradients are checked for finiteness before anything is modified.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || state.m.len() != params.len() {
        return Err(Error::Shape(format!(
            "adam: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    if !grads.iter().all(|g| g.is_finite()) {
        return Err(Error::NonFiniteGradient);
    }
    apply(params, grads, state, lr);
    Ok(())
}

fn apply(params: &mut [f64], grads: &[f64], state: &mut AdamState, lr: f64) {
    let AdamConfig { beta1, beta2, eps } = state.config;
    state.t += 1;
    let t = state.t as i32;
    let step = lr * (1.0 - beta2.powi(t)).sqrt() / (1.0 - beta1.powi(t));
    for (((p, &g), m), v) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        *p -= step * *m / (v.sqrt() + eps);
    }
}

/// Adam over an ordered list of parameter tensors sharing one step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamOptimizer {
    pub config: AdamConfig,
    states: Vec<AdamState>,
}

impl AdamOptimizer {
    pub fn new(tensor_lens: &[usize], config: AdamConfig) -> Self {
        Self {
            config,
            states: tensor_lens.iter().map(|&n| AdamState::new(n, config)).collect(),
        }
    }

    pub fn steps(&self) -> u64 {
        self.states.first().map_or(0, |s| s.t)
    }

    /// Update every tensor; nothing changes if any gradient is non-finite.
    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: Vec<&[f64]>, lr: f64) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != self.states.len() {
            return Err(Error::Shape(format!(
                "adam: {} tensors registered, {} params, {} grads",
                self.states.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), s) in params.iter().zip(&grads).zip(&self.states) {
            if p.len() != g.len() || s.m.len() != p.len() {
                return Err(Error::Shape("adam: tensor length changed".into()));
            }
        }
        if !grads.iter().all(|g| g.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFiniteGradient);
        }
        for ((p, g), s) in params.into_iter().zip(grads).zip(self.states.iter_mut()) {
            apply(p, g, s, lr);
        }
        Ok(())
    }
}
