//! On-disk formats for scenes and dense maps.
//!
//! Scene (`.rmsc`): magic `RMSC1\n`, one JSON header line, `h*w` occupancy
//! bytes, then one 8-byte record per point (row u16 LE, col u16 LE, value
//! f32 LE) sorted by (row, col).
//!
//! Dense map (`.rmap`): magic `RMAP1\n`, one JSON header line, `h*w` f32 LE
//! values row-major.
//!
//! Writers are deterministic, so write -> read -> write is byte-identical.

use crate::error::{Error, Result};
use crate::grid::{BuildingMap, NormRange, RadioMap};
use crate::ingest::{Band, Scene, ScenePoint};
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const SCENE_MAGIC: &str = "RMSC1\n";
pub const MAP_MAGIC: &str = "RMAP1\n";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneHeader {
    h: usize,
    w: usize,
    band_lo_mhz: f64,
    band_hi_mhz: f64,
    norm_lo_dbm: f64,
    norm_hi_dbm: f64,
    n_points: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapHeader {
    h: usize,
    w: usize,
}

fn check_u16(what: &str, v: usize) -> Result<u16> {
    u16::try_from(v).map_err(|_| Error::FormatMismatch(format!("{what} {v} exceeds u16 range")))
}

pub fn write_scene(scene: &Scene) -> Result<Vec<u8>> {
    scene.validate()?;
    let (h, w) = (scene.buildings.h, scene.buildings.w);
    check_u16("scene height", h)?;
    check_u16("scene width", w)?;
    let header = SceneHeader {
        h,
        w,
        band_lo_mhz: scene.band.lo_mhz,
        band_hi_mhz: scene.band.hi_mhz,
        norm_lo_dbm: scene.norm.lo_dbm,
        norm_hi_dbm: scene.norm.hi_dbm,
        n_points: scene.points.len(),
    };
    let mut out = Vec::new();
    out.extend_from_slice(SCENE_MAGIC.as_bytes());
    out.extend_from_slice(serde_json::to_string(&header)?.as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&scene.buildings.cells);
    for p in &scene.points {
        out.extend_from_slice(&(p.row as u16).to_le_bytes());
        out.extend_from_slice(&(p.col as u16).to_le_bytes());
        out.extend_from_slice(&(p.value as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn read_scene(bytes: &[u8]) -> Result<Scene> {
    let mut cursor = Cursor::new(bytes, "scene");
    cursor.expect_magic(SCENE_MAGIC)?;
    let header: SceneHeader = cursor.header_line()?;
    let cells = cursor.take(header.h * header.w, "scene occupancy")?.to_vec();
    let buildings = BuildingMap::from_cells(header.h, header.w, cells)?;
    let records = cursor.take(header.n_points * 8, "scene points")?;
    let mut points = Vec::with_capacity(header.n_points);
    for rec in records.chunks_exact(8) {
        let row = u16::from_le_bytes([rec[0], rec[1]]) as usize;
        let col = u16::from_le_bytes([rec[2], rec[3]]) as usize;
        let value = f32::from_le_bytes([rec[4], rec[5], rec[6], rec[7]]) as f64;
        points.push(ScenePoint { row, col, value });
    }
    cursor.expect_end()?;
    let scene = Scene {
        buildings,
        extent: crate::grid::GeoExtent::new(0.0, 1.0, 0.0, 1.0)?,
        band: Band::new(header.band_lo_mhz, header.band_hi_mhz)?,
        norm: NormRange::new(header.norm_lo_dbm, header.norm_hi_dbm)?,
        points,
    };
    scene.validate()?;
    Ok(scene)
}

pub fn write_map(map: &RadioMap) -> Result<Vec<u8>> {
    for &v in &map.values {
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidValue {
                what: "map value",
                detail: format!("{v} not in [0, 1]"),
            });
        }
    }
    let header = MapHeader { h: map.h, w: map.w };
    let mut out = Vec::new();
    out.extend_from_slice(MAP_MAGIC.as_bytes());
    out.extend_from_slice(serde_json::to_string(&header)?.as_bytes());
    out.push(b'\n');
    for &v in &map.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn read_map(bytes: &[u8]) -> Result<RadioMap> {
    let mut cursor = Cursor::new(bytes, "map");
    cursor.expect_magic(MAP_MAGIC)?;
    let header: MapHeader = cursor.header_line()?;
    let payload = cursor.take(header.h * header.w * 4, "map values")?;
    let mut values = Vec::with_capacity(header.h * header.w);
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidValue {
                what: "map value",
                detail: format!("{v} not in [0, 1]"),
            });
        }
        values.push(v);
    }
    cursor.expect_end()?;
    RadioMap::from_values(header.h, header.w, values)
}

pub fn save_scene(path: &Path, scene: &Scene) -> Result<()> {
    Ok(std::fs::write(path, write_scene(scene)?)?)
}

pub fn load_scene(path: &Path) -> Result<Scene> {
    read_scene(&std::fs::read(path)?)
}

pub fn save_map(path: &Path, map: &RadioMap) -> Result<()> {
    Ok(std::fs::write(path, write_map(map)?)?)
}

pub fn load_map(path: &Path) -> Result<RadioMap> {
    read_map(&std::fs::read(path)?)
}

/// Shared parsing state for the framed binary formats.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    pub fn new(bytes: &'a [u8], what: &'static str) -> Self {
        Cursor { bytes, pos: 0, what }
    }

    pub fn expect_magic(&mut self, magic: &'static str) -> Result<()> {
        let m = magic.as_bytes();
        if self.bytes.len() < m.len() || &self.bytes[..m.len()] != m {
            let found = self.bytes[..self.bytes.len().min(m.len())].to_vec();
            return Err(Error::BadMagic {
                expected: magic,
                found: String::from_utf8_lossy(&found).into_owned(),
            });
        }
        self.pos = m.len();
        Ok(())
    }

    pub fn header_line<T: serde::de::DeserializeOwned>(&mut self) -> Result<T> {
        let rest = &self.bytes[self.pos..];
        let nl = rest
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(Error::Truncated {
                what: "header",
                expected: 1,
                found: 0,
            })?;
        let line = &rest[..nl];
        self.pos += nl + 1;
        serde_json::from_slice(line)
            .map_err(|e| Error::Parse(format!("{} header: {e}", self.what)))
    }

    pub fn take(&mut self, n: usize, what: &'static str) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(Error::Truncated {
                what,
                expected: n,
                found: available,
            });
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    pub fn expect_end(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::FormatMismatch(format!(
                "{}: {} trailing bytes after payload",
                self.what,
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
