//! Real-world data ingestion: building footprints, drive-test spectrum
//! sweeps, and scene assembly.

pub mod format;

use crate::error::{Error, Result};
use crate::grid::{latlon_to_pixel, normalize_dbm, pixel_center, BuildingMap, GeoExtent, NormRange};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Frequency band in MHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub lo_mhz: f64,
    pub hi_mhz: f64,
}

impl Band {
    pub fn new(lo_mhz: f64, hi_mhz: f64) -> Result<Self> {
        let b = Band { lo_mhz, hi_mhz };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo_mhz.is_finite() && self.hi_mhz.is_finite())
            || self.lo_mhz <= 0.0
            || self.lo_mhz >= self.hi_mhz
        {
            return Err(Error::InvalidConfig(format!(
                "band [{}, {}] MHz",
                self.lo_mhz, self.hi_mhz
            )));
        }
        Ok(())
    }

    pub fn contains(&self, freq_mhz: f64) -> bool {
        freq_mhz >= self.lo_mhz && freq_mhz <= self.hi_mhz
    }
}

/// Building footprint: the outer ring of a GeoJSON polygon, vertices as
/// (lon, lat), first vertex repeated at the end. Holes are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingPolygon {
    pub ring: Vec<(f64, f64)>,
}

impl BuildingPolygon {
    pub fn new(mut ring: Vec<(f64, f64)>) -> Result<Self> {
        if ring.first() != ring.last() {
            if let Some(&first) = ring.first() {
                ring.push(first);
            }
        }
        let distinct: std::collections::BTreeSet<_> = ring
            .iter()
            .map(|&(x, y)| (x.to_bits(), y.to_bits()))
            .collect();
        if distinct.len() < 3 {
            return Err(Error::Parse(format!(
                "polygon ring has {} distinct vertices, need at least 3",
                distinct.len()
            )));
        }
        for &(x, y) in &ring {
            if !x.is_finite() || !y.is_finite() {
                return Err(Error::Parse("polygon ring has non-finite vertex".into()));
            }
        }
        Ok(BuildingPolygon { ring })
    }

    fn bbox(&self) -> (f64, f64, f64, f64) {
        let mut lo = (f64::INFINITY, f64::INFINITY);
        let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &(x, y) in &self.ring {
            lo = (lo.0.min(x), lo.1.min(y));
            hi = (hi.0.max(x), hi.1.max(y));
        }
        (lo.0, lo.1, hi.0, hi.1)
    }

    /// Even-odd containment test at (lon, lat); boundary points count as
    /// inside.
    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        let n = self.ring.len();
        for i in 0..n - 1 {
            if point_on_segment((lon, lat), self.ring[i], self.ring[i + 1]) {
                return true;
            }
        }
        let mut inside = false;
        for i in 0..n - 1 {
            let (x1, y1) = self.ring[i];
            let (x2, y2) = self.ring[i + 1];
            if (y1 > lat) != (y2 > lat) {
                let x_cross = (x2 - x1) * (lat - y1) / (y2 - y1) + x1;
                if lon < x_cross {
                    inside = !inside;
                }
            }
        }
        inside
    }
}

fn point_on_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
    if cross != 0.0 {
        return false;
    }
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Parse a GeoJSON FeatureCollection, keeping Polygon outer rings.
/// Non-polygon geometries are skipped; the skip count is returned so callers
/// can warn. Position order is [lon, lat].
pub fn parse_buildings(text: &str) -> Result<(Vec<BuildingPolygon>, usize)> {
    let doc: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("geojson: {e}")))?;
    let features = doc
        .get("features")
        .and_then(|f| f.as_array())
        .ok_or_else(|| Error::Parse("geojson: missing features array".into()))?;
    let mut polys = Vec::new();
    let mut skipped = 0usize;
    for (idx, feature) in features.iter().enumerate() {
        let geometry = feature
            .get("geometry")
            .ok_or_else(|| Error::Parse(format!("geojson feature {idx}: missing geometry")))?;
        if geometry.is_null() {
            skipped += 1;
            continue;
        }
        let gtype = geometry
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or_else(|| Error::Parse(format!("geojson feature {idx}: missing geometry type")))?;
        if gtype != "Polygon" {
            skipped += 1;
            continue;
        }
        let rings = geometry
            .get("coordinates")
            .and_then(|c| c.as_array())
            .ok_or_else(|| Error::Parse(format!("geojson feature {idx}: missing coordinates")))?;
        let outer = rings
            .first()
            .and_then(|r| r.as_array())
            .ok_or_else(|| Error::Parse(format!("geojson feature {idx}: empty polygon")))?;
        let mut ring = Vec::with_capacity(outer.len());
        for pos in outer {
            let pair = pos
                .as_array()
                .filter(|p| p.len() >= 2)
                .ok_or_else(|| Error::Parse(format!("geojson feature {idx}: bad position")))?;
            let lon = pair[0].as_f64().ok_or_else(|| {
                Error::Parse(format!("geojson feature {idx}: non-numeric longitude"))
            })?;
            let lat = pair[1].as_f64().ok_or_else(|| {
                Error::Parse(format!("geojson feature {idx}: non-numeric latitude"))
            })?;
            ring.push((lon, lat));
        }
        let poly = BuildingPolygon::new(ring)
            .map_err(|e| Error::Parse(format!("geojson feature {idx}: {e}")))?;
        polys.push(poly);
    }
    Ok((polys, skipped))
}

/// Burn footprints into an occupancy grid: a cell is building iff its center
/// passes the even-odd test for any footprint.
pub fn rasterize(
    polys: &[BuildingPolygon],
    extent: &GeoExtent,
    h: usize,
    w: usize,
) -> Result<BuildingMap> {
    extent.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::Dimension(format!("empty grid {h}x{w}")));
    }
    let boxes: Vec<_> = polys.iter().map(|p| p.bbox()).collect();
    let mut map = BuildingMap::zeros(h, w);
    for row in 0..h {
        for col in 0..w {
            let (lat, lon) = pixel_center(extent, row, col, h, w);
            let hit = polys.iter().zip(&boxes).any(|(p, b)| {
                lon >= b.0 && lon <= b.2 && lat >= b.1 && lat <= b.3 && p.contains(lon, lat)
            });
            if hit {
                map.set(row, col, 1);
            }
        }
    }
    Ok(map)
}

/// One stationary capture: a frequency sweep at a fixed location.
/// Frequencies are strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSweep {
    pub lat: f64,
    pub lon: f64,
    pub freqs_mhz: Vec<f64>,
    pub dbm: Vec<f64>,
}

/// Parse measurement CSV with header `lat,lon,freq_mhz,dbm`. Consecutive rows
/// sharing a location form one sweep.
pub fn parse_measurements(text: &str) -> Result<Vec<SpectrumSweep>> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l,
            None => return Err(Error::Parse("measurements: empty file".into())),
        }
    };
    if header.trim() != "lat,lon,freq_mhz,dbm" {
        return Err(Error::Parse(format!(
            "measurements: expected header 'lat,lon,freq_mhz,dbm', found {:?}",
            header.trim()
        )));
    }
    let mut sweeps: Vec<SpectrumSweep> = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::Parse(format!(
                "measurements line {lineno}: expected 4 fields, found {}",
                fields.len()
            )));
        }
        let parse = |name: &str, s: &str| -> Result<f64> {
            let v: f64 = s.trim().parse().map_err(|_| {
                Error::Parse(format!("measurements line {lineno}: bad {name} {s:?}"))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "measurements line {lineno}: non-finite {name}"
                )));
            }
            Ok(v)
        };
        let lat = parse("lat", fields[0])?;
        let lon = parse("lon", fields[1])?;
        let freq = parse("freq_mhz", fields[2])?;
        let dbm = parse("dbm", fields[3])?;
        let same_spot = sweeps
            .last()
            .map(|s| s.lat == lat && s.lon == lon)
            .unwrap_or(false);
        if same_spot {
            let sweep = sweeps.last_mut().unwrap();
            if freq <= *sweep.freqs_mhz.last().unwrap() {
                return Err(Error::Parse(format!(
                    "measurements line {lineno}: frequency {freq} not increasing within sweep"
                )));
            }
            sweep.freqs_mhz.push(freq);
            sweep.dbm.push(dbm);
        } else {
            sweeps.push(SpectrumSweep {
                lat,
                lon,
                freqs_mhz: vec![freq],
                dbm: vec![dbm],
            });
        }
    }
    if sweeps.is_empty() {
        return Err(Error::Parse("measurements: no data rows".into()));
    }
    Ok(sweeps)
}

/// How to average in-band readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BandAveraging {
    /// Mean of the dBm readings (log domain).
    #[default]
    Dbm,
    /// Mean in linear milliwatts, converted back to dBm.
    LinearMw,
}

/// Collapse one sweep to a single dBm figure over `band`.
pub fn band_average(sweep: &SpectrumSweep, band: &Band, mode: BandAveraging) -> Result<f64> {
    band.validate()?;
    let readings: Vec<f64> = sweep
        .freqs_mhz
        .iter()
        .zip(&sweep.dbm)
        .filter(|(f, _)| band.contains(**f))
        .map(|(_, d)| *d)
        .collect();
    if readings.is_empty() {
        return Err(Error::EmptyBand {
            lo_mhz: band.lo_mhz,
            hi_mhz: band.hi_mhz,
        });
    }
    let n = readings.len() as f64;
    Ok(match mode {
        BandAveraging::Dbm => readings.iter().sum::<f64>() / n,
        BandAveraging::LinearMw => {
            let mw = readings.iter().map(|d| 10f64.powf(d / 10.0)).sum::<f64>() / n;
            10.0 * mw.log10()
        }
    })
}

/// One measurement pixel of a scene, normalized value in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

/// A ready-to-evaluate scene: occupancy grid plus sparse normalized
/// measurements, with the metadata needed to reproduce the mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub buildings: BuildingMap,
    pub extent: GeoExtent,
    pub band: Band,
    pub norm: NormRange,
    /// Sorted by (row, col); pixels unique; values in [0, 1].
    pub points: Vec<ScenePoint>,
}

impl Scene {
    pub fn validate(&self) -> Result<()> {
        self.extent.validate()?;
        self.band.validate()?;
        self.norm.validate()?;
        let (h, w) = (self.buildings.h, self.buildings.w);
        let mut prev: Option<(usize, usize)> = None;
        for p in &self.points {
            if p.row >= h || p.col >= w {
                return Err(Error::Dimension(format!(
                    "scene point ({}, {}) outside {h}x{w}",
                    p.row, p.col
                )));
            }
            if !(0.0..=1.0).contains(&p.value) {
                return Err(Error::InvalidValue {
                    what: "scene point value",
                    detail: format!("{} at ({}, {})", p.value, p.row, p.col),
                });
            }
            if let Some(prev) = prev {
                if (p.row, p.col) <= prev {
                    return Err(Error::InvalidValue {
                        what: "scene points",
                        detail: format!("not strictly sorted at ({}, {})", p.row, p.col),
                    });
                }
            }
            prev = Some((p.row, p.col));
        }
        Ok(())
    }

    /// Points as mask candidates, in stored (sorted) order.
    pub fn candidates(&self) -> Vec<crate::sample::Candidate> {
        self.points.iter().map(|p| (p.row, p.col, p.value)).collect()
    }
}

/// Counters for inputs dropped during assembly.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AssemblyStats {
    pub sweeps_outside_extent: usize,
    pub sweeps_empty_band: usize,
}

/// Build a scene from footprints and sweeps: rasterize, band-average each
/// sweep, normalize, assign to pixels, average collisions.
pub fn assemble_scene(
    polys: &[BuildingPolygon],
    sweeps: &[SpectrumSweep],
    extent: &GeoExtent,
    band: &Band,
    size: (usize, usize),
    norm: &NormRange,
    mode: BandAveraging,
) -> Result<(Scene, AssemblyStats)> {
    let (h, w) = size;
    let buildings = rasterize(polys, extent, h, w)?;
    let mut stats = AssemblyStats::default();
    let mut cells: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for sweep in sweeps {
        let dbm = match band_average(sweep, band, mode) {
            Ok(v) => v,
            Err(Error::EmptyBand { .. }) => {
                stats.sweeps_empty_band += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let (row, col) = match latlon_to_pixel(extent, sweep.lat, sweep.lon, h, w) {
            Ok(rc) => rc,
            Err(Error::OutOfExtent { .. }) => {
                stats.sweeps_outside_extent += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let value = normalize_dbm(dbm, norm)?;
        let slot = cells.entry((row, col)).or_insert((0.0, 0));
        slot.0 += value;
        slot.1 += 1;
    }
    if cells.is_empty() {
        return Err(Error::Parse(
            "no usable measurements: all sweeps outside extent or band".into(),
        ));
    }
    let points = cells
        .into_iter()
        .map(|((row, col), (sum, count))| ScenePoint {
            row,
            col,
            value: sum / count as f64,
        })
        .collect();
    let scene = Scene {
        buildings,
        extent: *extent,
        band: *band,
        norm: *norm,
        points,
    };
    scene.validate()?;
    Ok((scene, stats))
}
