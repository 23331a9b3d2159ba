use serde::{Deserialize, Serialize};

use super::TrainError;

/// Moment estimates of one parameter group. `step` counts updates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn zeros(len: usize) -> Self {
        Self { step: 0, m: vec![0.0; len], v: vec![0.0; len] }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// Rebuilds per-item moments of width `stride` after the item list
    /// changed. `source[k]` is the old index of new item `k`, or `None` for
    /// an item that starts with zero moments.
    pub fn remap(&mut self, stride: usize, source: &[Option<usize>]) {
        let mut m = vec![0.0; source.len() * stride];
        let mut v = vec![0.0; source.len() * stride];
        for (k, src) in source.iter().enumerate() {
            if let Some(i) = *src {
                m[k * stride..(k + 1) * stride].copy_from_slice(&self.m[i * stride..(i + 1) * stride]);
                v[k * stride..(k + 1) * stride].copy_from_slice(&self.v[i * stride..(i + 1) * stride]);
            }
        }
        self.m = m;
        self.v = v;
    }
}

/// One bias-corrected Adam update. `group` names the parameters in errors.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    hp: &AdamHyper,
    group: &'static str,
) -> Result<(), TrainError> {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.len());
    if let Some(index) = grads.iter().position(|g| !g.is_finite()) {
        return Err(TrainError::NonFiniteGradient { group, index, value: grads[index] });
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - hp.beta1.powi(t);
    let bc2 = 1.0 - hp.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = hp.beta1 * state.m[i] + (1.0 - hp.beta1) * g;
        state.v[i] = hp.beta2 * state.v[i] + (1.0 - hp.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= hp.lr * m_hat / (v_hat.sqrt() + hp.eps);
    }
    Ok(())
}
