use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step decay: `base · factor^⌊epoch / every⌋`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base: f64,
    pub factor: f64,
    pub every: usize,
}

impl LrSchedule {
    pub fn new(base: f64) -> Self {
        Self { base, factor: 0.5, every: 100 }
    }

    pub fn lr(&self, epoch: usize) -> f64 {
        let drops = if self.every == 0 { 0 } else { epoch / self.every };
        self.base * self.factor.powi(drops as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub schedule: LrSchedule,
}

impl AdamState {
    /// Zero moments for parameters of the given lengths.
    pub fn new(lengths: &[usize], schedule: LrSchedule) -> Self {
        Self {
            m: lengths.iter().map(|&l| vec![0.0; l]).collect(),
            v: lengths.iter().map(|&l| vec![0.0; l]).collect(),
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            schedule,
        }
    }
}

/// One bias-corrected Adam update at learning rate `lr`.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState, lr: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(Error::shape(format!(
            "adam: {} params, {} grads, {} moment buffers",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    for (k, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.len() != g.len() || p.len() != state.m[k].len() {
            return Err(Error::shape(format!(
                "adam: tensor {k} has {} params, {} grads, {} moments",
                p.len(),
                g.len(),
                state.m[k].len()
            )));
        }
    }
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (k, (p, g)) in params.iter_mut().zip(grads).enumerate() {
        let (m, v) = (&mut state.m[k], &mut state.v[k]);
        for i in 0..p.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
    Ok(())
}
