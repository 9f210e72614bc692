//! Test-time adaptation: predict first, then take one gradient step.
//!
//! A stream of tasks is scored in order. Each task's predictions and RMSE
//! come from the weights as they stood *before* that task's update, so the
//! reported error never benefits from its own ground truth; the update only
//! helps later tasks. Optimizer moments reset at the start of every stream
//! and persist across it.

use super::math::Real;
use super::optim::{adam_step, sgd_step, AdamState};
use super::weights::PitWeights;
use super::{backward, forward_loss, MapTask, PitConfig};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TtaOptimizer {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TtaConfig {
    /// Adaptation learning rate. Zero disables updates entirely; the stream
    /// then leaves the weights bit-identical.
    pub eta: f64,
    pub optimizer: TtaOptimizer,
}

impl Default for TtaConfig {
    fn default() -> Self {
        TtaConfig {
            eta: 5e-6,
            optimizer: TtaOptimizer::Adam,
        }
    }
}

impl TtaConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.eta.is_finite() || self.eta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "tta eta must be finite and non-negative, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtaOutcome {
    /// Per-task query RMSE, scored before that task's own update.
    pub rmse: Vec<f64>,
    /// Per-task query predictions, same ordering as the task's query slice.
    pub preds: Vec<Vec<f64>>,
    /// Indices of tasks whose update was skipped because the loss or
    /// gradient was non-finite. Their predictions still count.
    pub skipped: Vec<usize>,
}

/// Run single-step adaptation over `tasks` in order, mutating `weights`.
pub fn adapt_stream(
    weights: &mut PitWeights<f32>,
    cfg: &PitConfig,
    tta: &TtaConfig,
    tasks: &[MapTask<'_>],
) -> Result<TtaOutcome> {
    cfg.validate()?;
    tta.validate()?;
    let mut opt = AdamState::new(weights.n_params());
    let mut out = TtaOutcome {
        rmse: Vec::with_capacity(tasks.len()),
        preds: Vec::with_capacity(tasks.len()),
        skipped: Vec::new(),
    };
    for (i, task) in tasks.iter().enumerate() {
        let state = forward_loss(weights, cfg, task)?;
        out.rmse.push(state.loss.to_f64());
        out.preds
            .push(state.preds.iter().map(|p| p.to_f64()).collect());
        if !state.loss.is_finite() {
            out.skipped.push(i);
            continue;
        }
        if tta.eta == 0.0 {
            continue;
        }
        let grads = backward(weights, cfg, task, &state)?;
        if grads.flatten().iter().any(|v| !v.is_finite()) {
            out.skipped.push(i);
            continue;
        }
        match tta.optimizer {
            TtaOptimizer::Adam => adam_step(weights, &grads, &mut opt, tta.eta, 0.0),
            TtaOptimizer::Sgd => sgd_step(weights, &grads, tta.eta),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sample::{mask_generate, map_candidates};
    use crate::synth::{generate_map, SynthConfig};

    fn stream_fixture(n: usize) -> Vec<(crate::grid::RadioMap, crate::sample::SampleSet)> {
        (0..n)
            .map(|i| {
                let sc = SynthConfig {
                    h: 16,
                    w: 16,
                    n_buildings: 2,
                    seed: 300 + i as u64,
                    ..SynthConfig::default()
                };
                let map = generate_map(&sc).unwrap().map;
                let set = mask_generate(&map_candidates(&map), 12, 24, 70 + i as u64).unwrap();
                (map, set)
            })
            .collect()
    }

    fn tasks(fix: &[(crate::grid::RadioMap, crate::sample::SampleSet)]) -> Vec<MapTask<'_>> {
        fix.iter()
            .map(|(m, s)| MapTask {
                h: m.h,
                w: m.w,
                known: &s.known,
                query: &s.query,
            })
            .collect()
    }

    #[test]
    fn zero_eta_scores_without_touching_weights() {
        let cfg = PitConfig::tiny();
        let mut w = PitWeights::init(&cfg, 21);
        let before = w.flatten();
        let fix = stream_fixture(3);
        let ts = tasks(&fix);
        let tta = TtaConfig {
            eta: 0.0,
            ..TtaConfig::default()
        };
        let out = adapt_stream(&mut w, &cfg, &tta, &ts).unwrap();
        let after = w.flatten();
        for (a, b) in before.iter().zip(&after) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        // Scores must equal independent per-task forwards of the fixed weights.
        for (task, &r) in ts.iter().zip(&out.rmse) {
            let solo = forward_loss(&w, &cfg, task).unwrap().loss.to_f64();
            assert_eq!(solo, r);
        }
        assert!(out.skipped.is_empty());
    }

    #[test]
    fn predictions_precede_their_own_update() {
        let cfg = PitConfig::tiny();
        let fix = stream_fixture(2);
        let ts = tasks(&fix);
        let tta = TtaConfig {
            eta: 1e-3,
            optimizer: TtaOptimizer::Adam,
        };
        let w0 = PitWeights::init(&cfg, 22);
        let mut w = w0.clone();
        let out = adapt_stream(&mut w, &cfg, &tta, &ts).unwrap();
        // Task 0 is scored with the initial weights.
        let s0 = forward_loss(&w0, &cfg, &ts[0]).unwrap();
        assert_eq!(out.rmse[0], s0.loss.to_f64());
        // Replay the first update by hand; task 1 must be scored with w1.
        let mut w1 = w0.clone();
        let g0 = backward(&w0, &cfg, &ts[0], &s0).unwrap();
        let mut opt = AdamState::new(w1.n_params());
        adam_step(&mut w1, &g0, &mut opt, tta.eta, 0.0);
        let s1 = forward_loss(&w1, &cfg, &ts[1]).unwrap();
        assert_eq!(out.rmse[1], s1.loss.to_f64());
    }

    #[test]
    fn sgd_stream_matches_manual_steps() {
        let cfg = PitConfig::tiny();
        let fix = stream_fixture(2);
        let ts = tasks(&fix);
        let tta = TtaConfig {
            eta: 1e-4,
            optimizer: TtaOptimizer::Sgd,
        };
        let w0 = PitWeights::init(&cfg, 23);
        let mut w = w0.clone();
        adapt_stream(&mut w, &cfg, &tta, &ts).unwrap();
        let mut manual = w0.clone();
        for t in &ts {
            let st = forward_loss(&manual, &cfg, t).unwrap();
            let g = backward(&manual, &cfg, t, &st).unwrap();
            sgd_step(&mut manual, &g, tta.eta);
        }
        assert_eq!(w.flatten(), manual.flatten());
    }

    #[test]
    fn adaptation_moves_weights() {
        let cfg = PitConfig::tiny();
        let fix = stream_fixture(2);
        let ts = tasks(&fix);
        let mut w = PitWeights::init(&cfg, 24);
        let before = w.flatten();
        let out = adapt_stream(&mut w, &cfg, &TtaConfig::default(), &ts).unwrap();
        assert_ne!(before, w.flatten());
        assert!(out.skipped.is_empty());
        assert_eq!(out.preds.len(), 2);
        assert_eq!(out.preds[0].len(), ts[0].query.len());
    }

    #[test]
    fn rejects_negative_eta() {
        let tta = TtaConfig {
            eta: -1e-6,
            ..TtaConfig::default()
        };
        assert!(tta.validate().is_err());
    }
}
