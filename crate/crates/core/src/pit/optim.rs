//! First-order optimizers over the flat manifest-order parameter view.
//!
//! Moment state is kept in f64 regardless of the model's working precision,
//! so update arithmetic is identical whether the weights are f32 or f64;
//! only the final write back rounds.

use super::math::Real;
use super::weights::PitWeights;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// Exponential moving averages of the gradient and its square, plus the
/// step counter that drives bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        AdamState {
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }
}

/// Cosine decay from `lr` at step 0 toward 0 at `total_steps`. Steps past
/// the schedule end hold at 0; a zero-length schedule holds at `lr`.
pub fn cosine_rate(lr: f64, step: u64, total_steps: u64) -> f64 {
    if total_steps == 0 {
        return lr;
    }
    let frac = (step.min(total_steps) as f64) / (total_steps as f64);
    lr * 0.5 * (1.0 + (std::f64::consts::PI * frac).cos())
}

/// One Adam step at learning rate `rate`, with optional decoupled weight
/// decay applied as `w -= rate * wd * w`. Pass `wd = 0` for plain Adam.
pub fn adam_step<T: Real>(
    weights: &mut PitWeights<T>,
    grads: &PitWeights<T>,
    state: &mut AdamState,
    rate: f64,
    wd: f64,
) {
    let g = grads.flatten();
    debug_assert_eq!(g.len(), state.m.len());
    state.step += 1;
    let bc1 = 1.0 - ADAM_BETA1.powi(state.step as i32);
    let bc2 = 1.0 - ADAM_BETA2.powi(state.step as i32);
    let mut off = 0;
    weights.visit_mut(&mut |_, _, data| {
        for (j, w) in data.iter_mut().enumerate() {
            let i = off + j;
            let gi = g[i].to_f64();
            state.m[i] = ADAM_BETA1 * state.m[i] + (1.0 - ADAM_BETA1) * gi;
            state.v[i] = ADAM_BETA2 * state.v[i] + (1.0 - ADAM_BETA2) * gi * gi;
            let m_hat = state.m[i] / bc1;
            let v_hat = state.v[i] / bc2;
            let mut wi = w.to_f64();
            wi -= rate * (m_hat / (v_hat.sqrt() + ADAM_EPS) + wd * wi);
            *w = T::from_f64(wi);
        }
        off += data.len();
    });
}

/// Plain gradient descent: w -= rate * g, computed in f64.
pub fn sgd_step<T: Real>(weights: &mut PitWeights<T>, grads: &PitWeights<T>, rate: f64) {
    let g = grads.flatten();
    let mut off = 0;
    weights.visit_mut(&mut |_, _, data| {
        for (j, w) in data.iter_mut().enumerate() {
            let wi = w.to_f64() - rate * g[off + j].to_f64();
            *w = T::from_f64(wi);
        }
        off += data.len();
    });
}
