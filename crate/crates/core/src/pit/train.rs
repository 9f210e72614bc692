//! Pretraining over a corpus of dense maps.
//!
//! Each epoch shuffles the corpus, draws a fresh known/query mask per map,
//! and takes one optimizer step per batch on the mean of the member
//! gradients. All randomness flows from the run seed through
//! [`crate::seeds::derive`], so a (corpus, config, seed) triple reproduces
//! the exact training trajectory; batch members are evaluated in parallel
//! but reduced in a fixed order.

use super::math::Real;
use super::optim::{adam_step, cosine_rate, AdamState};
use super::weights::PitWeights;
use super::{backward, forward_loss, MapTask, PitConfig};
use crate::error::{Error, Result};
use crate::grid::RadioMap;
use crate::sample::{map_candidates, mask_generate};
use crate::seeds;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Peak learning rate; decays to zero on a cosine schedule over the
    /// whole run. AdamW with decoupled weight decay.
    pub lr: f64,
    pub weight_decay: f64,
    /// Mask sizes drawn per map, per epoch.
    pub n_known: usize,
    pub n_query: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 20,
            batch_size: 64,
            lr: 1e-4,
            weight_decay: 1e-4,
            n_known: 50,
            n_query: 1500,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        if !self.lr.is_finite() || self.lr < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "lr must be finite and non-negative, got {}",
                self.lr
            )));
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "weight_decay must be finite and non-negative, got {}",
                self.weight_decay
            )));
        }
        if self.n_known == 0 || self.n_query == 0 {
            return Err(Error::InvalidConfig(
                "n_known and n_query must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean per-map RMSE for each epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Train `weights` in place. Returns the per-epoch loss history.
pub fn pretrain(
    weights: &mut PitWeights<f32>,
    cfg: &PitConfig,
    maps: &[RadioMap],
    tc: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    tc.validate()?;
    if maps.is_empty() {
        return Err(Error::InvalidConfig("no training maps".into()));
    }
    for (i, m) in maps.iter().enumerate() {
        if m.h * m.w < tc.n_known + tc.n_query {
            return Err(Error::InvalidConfig(format!(
                "map {i} has {} pixels, too few for a {} + {} mask",
                m.h * m.w,
                tc.n_known,
                tc.n_query
            )));
        }
    }
    let candidates: Vec<_> = maps.iter().map(map_candidates).collect();
    let n_maps = maps.len();
    let batches_per_epoch = n_maps.div_ceil(tc.batch_size);
    let total_steps = (tc.epochs * batches_per_epoch) as u64;
    let mut opt = AdamState::new(weights.n_params());
    let mut step: u64 = 0;
    let mut epoch_losses = Vec::with_capacity(tc.epochs);

    for epoch in 0..tc.epochs {
        let mut order: Vec<usize> = (0..n_maps).collect();
        let mut rng =
            ChaCha8Rng::seed_from_u64(seeds::derive(tc.seed, seeds::tag::SHUFFLE, epoch as u64));
        order.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;

        for batch in order.chunks(tc.batch_size) {
            let members: Vec<(f64, PitWeights<f32>)> = batch
                .par_iter()
                .map(|&idx| -> Result<(f64, PitWeights<f32>)> {
                    let mask_seed = seeds::derive(
                        tc.seed,
                        seeds::tag::MASK,
                        (epoch * n_maps + idx) as u64,
                    );
                    let set =
                        mask_generate(&candidates[idx], tc.n_known, tc.n_query, mask_seed)?;
                    let task = MapTask {
                        h: maps[idx].h,
                        w: maps[idx].w,
                        known: &set.known,
                        query: &set.query,
                    };
                    let state = forward_loss(weights, cfg, &task)?;
                    let grads = backward(weights, cfg, &task, &state)?;
                    Ok((state.loss.to_f64(), grads))
                })
                .collect::<Result<_>>()?;

            // Fixed-order mean over the batch, independent of thread count.
            let inv = 1.0 / members.len() as f32;
            let mut acc = members[0].1.flatten();
            for (_, g) in &members[1..] {
                for (a, b) in acc.iter_mut().zip(g.flatten()) {
                    *a += b;
                }
            }
            for a in acc.iter_mut() {
                *a *= inv;
            }
            let batch_loss =
                members.iter().map(|(l, _)| *l).sum::<f64>() / members.len() as f64;
            epoch_loss_sum += members.iter().map(|(l, _)| *l).sum::<f64>();
            if !batch_loss.is_finite() || acc.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "training diverged at step {step} (epoch {epoch})"
                )));
            }
            let mut grads = PitWeights::<f32>::zeros(cfg);
            grads.assign_flat(&acc);
            let rate = cosine_rate(tc.lr, step, total_steps);
            adam_step(weights, &grads, &mut opt, rate, tc.weight_decay);
            step += 1;
        }
        epoch_losses.push(epoch_loss_sum / n_maps as f64);
    }
    Ok(TrainReport {
        epoch_losses,
        steps: step,
    })
}
