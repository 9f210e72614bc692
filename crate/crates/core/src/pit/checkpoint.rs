//! Weight checkpoints (RPTW1).
//!
//! Layout: the magic line `RPTW1`, one line of JSON holding the model config
//! and the parameter manifest (name and shape, in manifest order), then the
//! raw f32 little-endian payload of every parameter concatenated in that
//! same order. Writing what was read reproduces the input byte for byte.

use super::weights::PitWeights;
use super::PitConfig;
use crate::error::{Error, Result};
use crate::ingest::format::Cursor;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const WEIGHTS_MAGIC: &str = "RPTW1\n";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointHeader {
    config: PitConfig,
    manifest: Vec<ManifestEntry>,
}

pub fn write_weights(cfg: &PitConfig, weights: &PitWeights<f32>) -> Result<Vec<u8>> {
    cfg.validate()?;
    let header = CheckpointHeader {
        config: cfg.clone(),
        manifest: weights
            .manifest()
            .into_iter()
            .map(|(name, shape)| ManifestEntry { name, shape })
            .collect(),
    };
    let mut out = Vec::new();
    out.extend_from_slice(WEIGHTS_MAGIC.as_bytes());
    out.extend_from_slice(serde_json::to_string(&header)?.as_bytes());
    out.push(b'\n');
    weights.visit(&mut |_, _, data| {
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    });
    Ok(out)
}

pub fn read_weights(bytes: &[u8]) -> Result<(PitConfig, PitWeights<f32>)> {
    let mut cur = Cursor::new(bytes, "weight checkpoint");
    cur.expect_magic(WEIGHTS_MAGIC)?;
    let header: CheckpointHeader = cur.header_line()?;
    header.config.validate()?;
    let mut weights = PitWeights::<f32>::zeros(&header.config);
    let expected = weights.manifest();
    if expected.len() != header.manifest.len() {
        return Err(Error::FormatMismatch(format!(
            "checkpoint lists {} parameters, config implies {}",
            header.manifest.len(),
            expected.len()
        )));
    }
    for (got, (name, shape)) in header.manifest.iter().zip(&expected) {
        if got.name != *name || got.shape != *shape {
            return Err(Error::FormatMismatch(format!(
                "checkpoint parameter {} with shape {:?}, expected {} with shape {:?}",
                got.name, got.shape, name, shape
            )));
        }
    }
    let mut err = None;
    cur_fill(&mut cur, &mut weights, &mut err);
    if let Some(e) = err {
        return Err(e);
    }
    cur.expect_end()?;
    Ok((header.config, weights))
}

fn cur_fill(cur: &mut Cursor<'_>, weights: &mut PitWeights<f32>, err: &mut Option<Error>) {
    weights.visit_mut(&mut |name, _, data| {
        if err.is_some() {
            return;
        }
        match cur.take(4 * data.len(), "weight payload") {
            Ok(raw) => {
                for (i, v) in data.iter_mut().enumerate() {
                    let b = [raw[4 * i], raw[4 * i + 1], raw[4 * i + 2], raw[4 * i + 3]];
                    *v = f32::from_le_bytes(b);
                    if !v.is_finite() {
                        *err = Some(Error::InvalidValue {
                            what: "checkpoint weight",
                            detail: format!("non-finite value in {name}"),
                        });
                        return;
                    }
                }
            }
            Err(e) => *err = Some(e),
        }
    });
}

pub fn save_weights(path: &Path, cfg: &PitConfig, weights: &PitWeights<f32>) -> Result<()> {
    Ok(fs::write(path, write_weights(cfg, weights)?)?)
}

pub fn load_weights(path: &Path) -> Result<(PitConfig, PitWeights<f32>)> {
    read_weights(&fs::read(path)?)
}
