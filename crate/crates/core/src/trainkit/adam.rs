//! Adam with bias correction.

use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First and second moment estimates, one entry per parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn zeros(n: usize) -> Self {
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamHyper {
    pub fn with_lr(lr: f64) -> Self {
        AdamHyper {
            lr,
            beta1: BETA1,
            beta2: BETA2,
            eps: EPSILON,
        }
    }
}

/// One Adam update at step `t` (1-based).
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, hyper: &AdamHyper, t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParam("Adam step counter starts at 1".into()));
    }
    let n = params.len();
    if grads.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::shape(
            format!("{n} parameters"),
            format!("{} grads, {} + {} moments", grads.len(), state.m.len(), state.v.len()),
        ));
    }
    let AdamHyper { lr, beta1, beta2, eps } = *hyper;
    let bias1 = 1.0 - beta1.powf(t as f64);
    let bias2 = 1.0 - beta2.powf(t as f64);
    for i in 0..n {
        let g = grads[i];
        let m = beta1 * state.m[i] + (1.0 - beta1) * g;
        let v = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        state.m[i] = m;
        state.v[i] = v;
        params[i] -= lr * (m / bias1) / ((v / bias2).sqrt() + eps);
    }
    Ok(())
}

/// Owns the hyper-parameters, moment buffers and step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    hyper: AdamHyper,
    state: AdamState,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, hyper: AdamHyper) -> Self {
        Adam {
            hyper,
            state: AdamState::zeros(n),
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        self.t += 1;
        adam_step(params, grads, &mut self.state, &self.hyper, self.t)
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }
}
