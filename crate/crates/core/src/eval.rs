//! Method evaluation over a set of scenes, with comparable reports.
//!
//! Every method is scored on the same per-scene splits: two thirds of a
//! scene's points are revealed, the rest are held out, and the split is a
//! pure function of the evaluation seed and the scene's id. Reports from
//! different methods over the same scenes and seed are therefore directly
//! comparable, and [`compare`] refuses anything else.

use crate::error::{Error, Result};
use crate::ingest::Scene;
use crate::kriging::{fit_scene_model, krige_predict, KrigeOpts, VariogramKind};
use crate::pit::tta::{adapt_stream, TtaConfig};
use crate::pit::weights::PitWeights;
use crate::pit::{predict_values, rmse, MapTask, PitConfig};
use crate::sample::{mask_generate, test_split_counts, SampleSet};
use crate::seeds;
use serde::{Deserialize, Serialize};

/// Minimum points a scene needs to participate: below this the split
/// degenerates (no queries, or a kriging system with nothing to fit).
pub const MIN_SCENE_POINTS: usize = 3;

#[derive(Debug, Clone)]
pub enum Evaluator<'a> {
    Pit {
        weights: &'a PitWeights<f32>,
        cfg: &'a PitConfig,
    },
    /// Adapts along the scene stream in the order given; each scene is
    /// scored before its own update.
    PitTta {
        weights: &'a PitWeights<f32>,
        cfg: &'a PitConfig,
        tta: &'a TtaConfig,
    },
    Kriging {
        kind: VariogramKind,
        knn: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRow {
    pub id: String,
    pub n_known: usize,
    pub n_query: usize,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub mean: f64,
    /// Population standard deviation over scene RMSEs.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TtaInfo {
    pub enabled: bool,
    pub eta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub method: String,
    pub seed: u64,
    pub tta: TtaInfo,
    /// One row per evaluated scene, in evaluation order.
    pub scenes: Vec<SceneRow>,
    pub aggregate: Aggregate,
    /// Ids of scenes left out for having fewer than [`MIN_SCENE_POINTS`] points.
    pub skipped: Vec<String>,
}

/// FNV-1a. Splits key on the scene id, not its position, so reordering a
/// stream never changes any scene's split.
fn id_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in id.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// The deterministic known/query split for one scene under `seed`.
pub fn scene_split(scene: &Scene, id: &str, seed: u64) -> Result<SampleSet> {
    let candidates = scene.candidates();
    let (n_known, n_query) = test_split_counts(candidates.len());
    let split_seed = seeds::derive(seed, seeds::tag::SPLIT, id_hash(id));
    mask_generate(&candidates, n_known, n_query, split_seed)
}

fn aggregate(rows: &[SceneRow]) -> Aggregate {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.rmse).sum::<f64>() / n;
    let var = rows.iter().map(|r| (r.rmse - mean).powi(2)).sum::<f64>() / n;
    Aggregate {
        mean,
        std: var.sqrt(),
    }
}

type PreparedScene<'a> = (&'a String, &'a Scene, SampleSet);

fn prepare(
    scenes: &[(String, Scene)],
    seed: u64,
) -> Result<(Vec<PreparedScene<'_>>, Vec<String>)> {
    let mut skipped = Vec::new();
    let mut usable: Vec<PreparedScene<'_>> = Vec::new();
    for (id, scene) in scenes {
        if scene.points.len() < MIN_SCENE_POINTS {
            skipped.push(id.clone());
            continue;
        }
        usable.push((id, scene, scene_split(scene, id, seed)?));
    }
    if usable.is_empty() {
        return Err(Error::InsufficientPoints { need: 1, have: 0 });
    }
    Ok((usable, skipped))
}

fn assemble(
    method: &str,
    tta_info: TtaInfo,
    seed: u64,
    usable: &[PreparedScene<'_>],
    per_scene: &[f64],
    skipped: Vec<String>,
) -> EvalReport {
    let rows: Vec<SceneRow> = usable
        .iter()
        .zip(per_scene)
        .map(|((id, _, set), &r)| SceneRow {
            id: (*id).clone(),
            n_known: set.known.len(),
            n_query: set.query.len(),
            rmse: r,
        })
        .collect();
    EvalReport {
        method: method.to_string(),
        seed,
        tta: tta_info,
        aggregate: aggregate(&rows),
        scenes: rows,
        skipped,
    }
}

fn query_truth(set: &SampleSet) -> Vec<f64> {
    set.query.iter().map(|q| q.truth).collect()
}

/// Run the adaptation stream over `scenes` and return both the report and
/// the weights as they stood after the final update. `evaluate` with
/// [`Evaluator::PitTta`] produces the identical report through this
/// function; the separate entry point exists for callers that keep the
/// adapted model.
pub fn adapt_and_report(
    scenes: &[(String, Scene)],
    weights: &PitWeights<f32>,
    cfg: &PitConfig,
    tta: &TtaConfig,
    seed: u64,
) -> Result<(EvalReport, PitWeights<f32>)> {
    let (usable, skipped) = prepare(scenes, seed)?;
    let tasks: Vec<MapTask<'_>> = usable
        .iter()
        .map(|(_, scene, set)| MapTask {
            h: scene.buildings.h,
            w: scene.buildings.w,
            known: &set.known,
            query: &set.query,
        })
        .collect();
    let mut adapted = weights.clone();
    let outcome = adapt_stream(&mut adapted, cfg, tta, &tasks)?;
    let per_scene: Vec<f64> = outcome
        .preds
        .iter()
        .zip(&usable)
        .map(|(preds, (_, _, set))| rmse(preds, &query_truth(set)))
        .collect();
    // A zero rate never updates anything; report it as the plain model.
    let (method, tta_info) = if tta.eta == 0.0 {
        ("pit", TtaInfo { enabled: false, eta: 0.0 })
    } else {
        ("pit+tta", TtaInfo { enabled: true, eta: tta.eta })
    };
    let report = assemble(method, tta_info, seed, &usable, &per_scene, skipped);
    Ok((report, adapted))
}

/// Score `evaluator` on `scenes`. Scenes are processed in the order given,
/// which is the adaptation order for the TTA variant.
pub fn evaluate(scenes: &[(String, Scene)], evaluator: &Evaluator<'_>, seed: u64) -> Result<EvalReport> {
    if let Evaluator::PitTta { weights, cfg, tta } = evaluator {
        return adapt_and_report(scenes, weights, cfg, tta, seed).map(|(r, _)| r);
    }
    let (usable, skipped) = prepare(scenes, seed)?;
    let no_tta = TtaInfo { enabled: false, eta: 0.0 };
    // Per-scene query RMSE. All methods score in f64 over their predictions.
    match evaluator {
        Evaluator::Pit { weights, cfg } => {
            let mut per_scene = Vec::with_capacity(usable.len());
            for (_, scene, set) in &usable {
                let coords: Vec<(usize, usize)> =
                    set.query.iter().map(|q| (q.row, q.col)).collect();
                let preds = predict_values(
                    *weights,
                    cfg,
                    &set.known,
                    &coords,
                    scene.buildings.h,
                    scene.buildings.w,
                )?;
                let preds: Vec<f64> = preds.iter().map(|&p| p as f64).collect();
                per_scene.push(rmse(&preds, &query_truth(set)));
            }
            Ok(assemble("pit", no_tta, seed, &usable, &per_scene, skipped))
        }
        Evaluator::Kriging { kind, knn } => {
            let opts = KrigeOpts { knn: *knn };
            let mut per_scene = Vec::with_capacity(usable.len());
            for (_, scene, set) in &usable {
                let model =
                    fit_scene_model(&set.known, scene.buildings.h, scene.buildings.w, *kind);
                let mut preds = Vec::with_capacity(set.query.len());
                for q in &set.query {
                    let (pred, _) =
                        krige_predict(&set.known, &model, (q.row as f64, q.col as f64), &opts)?;
                    preds.push(pred);
                }
                per_scene.push(rmse(&preds, &query_truth(set)));
            }
            Ok(assemble("kriging", no_tta, seed, &usable, &per_scene, skipped))
        }
        Evaluator::PitTta { .. } => unreachable!("handled above"),
    }
}

/// Relative improvement of `other` over `baseline`, in percent of the
/// baseline mean: positive means `other` has lower error. Reports must
/// cover the same scenes, splits, and seed.
pub fn compare(baseline: &EvalReport, other: &EvalReport) -> Result<f64> {
    if baseline.seed != other.seed {
        return Err(Error::NotComparable(format!(
            "seeds differ: {} vs {}",
            baseline.seed, other.seed
        )));
    }
    if baseline.scenes.len() != other.scenes.len() {
        return Err(Error::NotComparable(format!(
            "scene counts differ: {} vs {}",
            baseline.scenes.len(),
            other.scenes.len()
        )));
    }
    for (a, b) in baseline.scenes.iter().zip(&other.scenes) {
        if a.id != b.id || a.n_known != b.n_known || a.n_query != b.n_query {
            return Err(Error::NotComparable(format!(
                "scene {} evaluated on different splits ({}/{} vs {}/{})",
                a.id, a.n_known, a.n_query, b.n_known, b.n_query
            )));
        }
    }
    if !(baseline.aggregate.mean > 0.0) {
        return Err(Error::NotComparable(format!(
            "baseline mean RMSE {} leaves relative change undefined",
            baseline.aggregate.mean
        )));
    }
    Ok((baseline.aggregate.mean - other.aggregate.mean) / baseline.aggregate.mean * 100.0)
}

/// Render a report as pretty JSON with keys in sorted order, so equal
/// reports serialize to equal bytes.
pub fn report_json(report: &EvalReport) -> Result<String> {
    let value = serde_json::to_value(report)?;
    Ok(serde_json::to_string_pretty(&value)?)
}
