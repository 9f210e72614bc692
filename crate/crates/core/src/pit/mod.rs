//! Per-pixel transformer for radio-map completion.
//!
//! Known measurements become tokens (position encoding plus embedded value),
//! a self-attention encoder turns them into a memory, and every unknown pixel
//! is decoded independently by cross-attending its position token onto that
//! memory. Query pixels never attend to each other, so predictions are
//! identical whether decoded one at a time, chunked, or permuted.
//!
//! The same forward/backward code is generic over f32/f64. f32 is the
//! working precision for training and inference; f64 backs the
//! finite-difference gradient oracle and the optimizer fidelity tests.

pub mod checkpoint;
pub mod math;
pub mod optim;
pub mod tta;
pub mod weights;

mod backward;
mod forward;
mod train;

pub use backward::{backward, gradient_check, GradCheckReport};
pub use forward::{forward_loss, predict_values, TrainState};
pub use train::{pretrain, TrainConfig, TrainReport};

use crate::error::{Error, Result};
use crate::sample::{KnownPoint, QueryPoint};
use math::Real;
use serde::{Deserialize, Serialize};

/// Architecture hyperparameters. `validate` pins the shape invariants the
/// forward pass assumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PitConfig {
    /// Token width. Position and value embeddings each take half.
    pub d_model: usize,
    pub n_heads: usize,
    pub n_enc_layers: usize,
    pub n_dec_layers: usize,
    /// Hidden width of the per-block feed-forward.
    pub d_ff: usize,
    /// Octaves per axis in the position encoding (4 features per octave pair).
    pub n_fourier: usize,
    /// Query pixels decoded per batch at inference time. Has no effect on
    /// the predicted values, only on peak memory.
    pub decode_chunk: usize,
}

impl Default for PitConfig {
    fn default() -> Self {
        PitConfig {
            d_model: 64,
            n_heads: 4,
            n_enc_layers: 3,
            n_dec_layers: 3,
            d_ff: 256,
            n_fourier: 16,
            decode_chunk: 1024,
        }
    }
}

impl PitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_model == 0 || self.d_model % 2 != 0 {
            return Err(Error::InvalidConfig(format!(
                "d_model must be a positive even number, got {}",
                self.d_model
            )));
        }
        if self.n_heads == 0 || self.d_model % self.n_heads != 0 {
            return Err(Error::InvalidConfig(format!(
                "n_heads ({}) must divide d_model ({})",
                self.n_heads, self.d_model
            )));
        }
        if self.n_enc_layers != 3 || self.n_dec_layers != 3 {
            return Err(Error::InvalidConfig(format!(
                "encoder and decoder are fixed at 3 layers, got {}/{}",
                self.n_enc_layers, self.n_dec_layers
            )));
        }
        if self.d_ff == 0 {
            return Err(Error::InvalidConfig("d_ff must be positive".into()));
        }
        if self.n_fourier == 0 {
            return Err(Error::InvalidConfig(
                "n_fourier must be positive".into(),
            ));
        }
        if self.decode_chunk == 0 {
            return Err(Error::InvalidConfig(
                "decode_chunk must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Small shape for fast numeric tests. Same layer count, narrow widths.
    pub fn tiny() -> Self {
        PitConfig {
            d_model: 8,
            n_heads: 1,
            n_enc_layers: 3,
            n_dec_layers: 3,
            d_ff: 16,
            n_fourier: 2,
            decode_chunk: 64,
        }
    }
}

/// One map's supervision: known points feed the encoder, query points carry
/// held-out truth for the loss. Borrows from the owning [`crate::sample::SampleSet`].
#[derive(Debug, Clone, Copy)]
pub struct MapTask<'a> {
    pub h: usize,
    pub w: usize,
    pub known: &'a [KnownPoint],
    pub query: &'a [QueryPoint],
}

impl MapTask<'_> {
    pub(crate) fn validate(&self, cfg: &PitConfig) -> Result<()> {
        cfg.validate()?;
        if self.h == 0 || self.w == 0 {
            return Err(Error::Dimension(format!(
                "map dimensions must be positive, got {}x{}",
                self.h, self.w
            )));
        }
        if self.known.is_empty() {
            return Err(Error::InsufficientPoints { need: 1, have: 0 });
        }
        for p in self.known {
            if p.row >= self.h || p.col >= self.w {
                return Err(Error::Dimension(format!(
                    "known point ({}, {}) outside {}x{} grid",
                    p.row, p.col, self.h, self.w
                )));
            }
            if !p.value.is_finite() || !(0.0..=1.0).contains(&p.value) {
                return Err(Error::InvalidValue {
                    what: "known point value",
                    detail: format!("{} at ({}, {}) is outside [0, 1]", p.value, p.row, p.col),
                });
            }
        }
        for q in self.query {
            if q.row >= self.h || q.col >= self.w {
                return Err(Error::Dimension(format!(
                    "query point ({}, {}) outside {}x{} grid",
                    q.row, q.col, self.h, self.w
                )));
            }
            if !q.truth.is_finite() {
                return Err(Error::InvalidValue {
                    what: "query truth",
                    detail: format!("non-finite at ({}, {})", q.row, q.col),
                });
            }
        }
        Ok(())
    }
}

/// Root-mean-square error between predictions and targets.
pub fn rmse<T: Real>(preds: &[T], truth: &[T]) -> T {
    debug_assert_eq!(preds.len(), truth.len());
    if preds.is_empty() {
        return T::zero();
    }
    let mut acc = T::zero();
    for (&p, &t) in preds.iter().zip(truth) {
        let d = p - t;
        acc = acc + d * d;
    }
    (acc / T::from_f64(preds.len() as f64)).sqrt()
}

/// d(rmse)/d(pred): (p - t) / (n * rmse). Flat zero at the loss minimum,
/// where the square root is not differentiable.
pub(crate) fn rmse_grad<T: Real>(preds: &[T], truth: &[T], loss: T) -> Vec<T> {
    let n = T::from_f64(preds.len() as f64);
    if loss == T::zero() {
        return vec![T::zero(); preds.len()];
    }
    preds
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (p - t) / (n * loss))
        .collect()
}
