//! Grids, geographic extents and value normalization.
//!
//! Conventions used everywhere downstream:
//!   - row 0 is the northern edge; rows grow southward, columns grow eastward;
//!   - maps are row-major;
//!   - pixel (r, c) covers the half-open cell whose center sits at
//!     (r + 0.5, c + 0.5) in grid units;
//!   - normalized signal values live in [0, 1].

use crate::error::{Error, Result};
use crate::sample::SampleSet;
use serde::{Deserialize, Serialize};

/// Geographic bounding box in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoExtent {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl GeoExtent {
    pub fn new(lat_min: f64, lat_max: f64, lon_min: f64, lon_max: f64) -> Result<Self> {
        let e = GeoExtent {
            lat_min,
            lat_max,
            lon_min,
            lon_max,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("lat_min", self.lat_min),
            ("lat_max", self.lat_max),
            ("lon_min", self.lon_min),
            ("lon_max", self.lon_max),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidValue {
                    what: "extent",
                    detail: format!("{name} is not finite"),
                });
            }
        }
        if self.lat_min >= self.lat_max || self.lon_min >= self.lon_max {
            return Err(Error::InvalidConfig(format!(
                "degenerate extent: lat [{}, {}], lon [{}, {}]",
                self.lat_min, self.lat_max, self.lon_min, self.lon_max
            )));
        }
        Ok(())
    }
}

/// Dense map of normalized signal values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RadioMap {
    pub h: usize,
    pub w: usize,
    pub values: Vec<f32>,
}

impl RadioMap {
    pub fn zeros(h: usize, w: usize) -> Self {
        RadioMap {
            h,
            w,
            values: vec![0.0; h * w],
        }
    }

    pub fn from_values(h: usize, w: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != h * w {
            return Err(Error::Dimension(format!(
                "map payload holds {} values, dims are {}x{}",
                values.len(),
                h,
                w
            )));
        }
        Ok(RadioMap { h, w, values })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f32 {
        self.values[row * self.w + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f32) {
        self.values[row * self.w + col] = v;
    }
}

/// Binary occupancy grid; 1 marks building interior.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildingMap {
    pub h: usize,
    pub w: usize,
    pub cells: Vec<u8>,
}

impl BuildingMap {
    pub fn zeros(h: usize, w: usize) -> Self {
        BuildingMap {
            h,
            w,
            cells: vec![0; h * w],
        }
    }

    pub fn from_cells(h: usize, w: usize, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != h * w {
            return Err(Error::Dimension(format!(
                "occupancy payload holds {} cells, dims are {}x{}",
                cells.len(),
                h,
                w
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 1) {
            return Err(Error::InvalidValue {
                what: "occupancy cell",
                detail: format!("expected 0 or 1, found {bad}"),
            });
        }
        Ok(BuildingMap { h, w, cells })
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.w + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: u8) {
        self.cells[row * self.w + col] = v;
    }
}

/// dBm range mapped onto [0, 1]. Fixed per dataset so values stay comparable
/// across scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRange {
    pub lo_dbm: f64,
    pub hi_dbm: f64,
}

impl NormRange {
    pub fn new(lo_dbm: f64, hi_dbm: f64) -> Result<Self> {
        let r = NormRange { lo_dbm, hi_dbm };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.lo_dbm.is_finite() || !self.hi_dbm.is_finite() || self.lo_dbm >= self.hi_dbm {
            return Err(Error::InvalidConfig(format!(
                "normalization range [{}, {}] dBm",
                self.lo_dbm, self.hi_dbm
            )));
        }
        Ok(())
    }
}

impl Default for NormRange {
    fn default() -> Self {
        NormRange {
            lo_dbm: -120.0,
            hi_dbm: -20.0,
        }
    }
}

/// Map a geographic coordinate to the pixel that contains it.
///
/// Row 0 is the northern (lat_max) edge. Coordinates exactly on the southern
/// or eastern boundary clamp into the last row/column; anything outside the
/// extent is an error naming the offending axis.
pub fn latlon_to_pixel(
    extent: &GeoExtent,
    lat: f64,
    lon: f64,
    h: usize,
    w: usize,
) -> Result<(usize, usize)> {
    extent.validate()?;
    if h == 0 || w == 0 {
        return Err(Error::Dimension(format!("empty grid {h}x{w}")));
    }
    if !lat.is_finite() || lat < extent.lat_min || lat > extent.lat_max {
        return Err(Error::OutOfExtent {
            axis: "lat",
            value: lat,
            min: extent.lat_min,
            max: extent.lat_max,
        });
    }
    if !lon.is_finite() || lon < extent.lon_min || lon > extent.lon_max {
        return Err(Error::OutOfExtent {
            axis: "lon",
            value: lon,
            min: extent.lon_min,
            max: extent.lon_max,
        });
    }
    let row_f = (extent.lat_max - lat) / (extent.lat_max - extent.lat_min) * h as f64;
    let col_f = (lon - extent.lon_min) / (extent.lon_max - extent.lon_min) * w as f64;
    let row = (row_f.floor() as usize).min(h - 1);
    let col = (col_f.floor() as usize).min(w - 1);
    Ok((row, col))
}

/// Geographic coordinate of a pixel center; inverse of [`latlon_to_pixel`] up
/// to the containing cell.
pub fn pixel_center(extent: &GeoExtent, row: usize, col: usize, h: usize, w: usize) -> (f64, f64) {
    let lat = extent.lat_max - (row as f64 + 0.5) / h as f64 * (extent.lat_max - extent.lat_min);
    let lon = extent.lon_min + (col as f64 + 0.5) / w as f64 * (extent.lon_max - extent.lon_min);
    (lat, lon)
}

/// Map a dBm value into [0, 1], clamping at the range edges.
pub fn normalize_dbm(dbm: f64, range: &NormRange) -> Result<f64> {
    range.validate()?;
    if !dbm.is_finite() {
        return Err(Error::InvalidValue {
            what: "dbm",
            detail: format!("{dbm}"),
        });
    }
    Ok(((dbm - range.lo_dbm) / (range.hi_dbm - range.lo_dbm)).clamp(0.0, 1.0))
}

/// Inverse of [`normalize_dbm`] on [0, 1].
pub fn denormalize_dbm(unit: f64, range: &NormRange) -> Result<f64> {
    range.validate()?;
    if !unit.is_finite() || !(0.0..=1.0).contains(&unit) {
        return Err(Error::InvalidValue {
            what: "normalized value",
            detail: format!("{unit} not in [0, 1]"),
        });
    }
    Ok(range.lo_dbm + unit * (range.hi_dbm - range.lo_dbm))
}

/// Downsample a radio map by an integer factor, averaging each block.
pub fn avg_pool_map(map: &RadioMap, factor: usize) -> Result<RadioMap> {
    let (h, w) = pooled_dims(map.h, map.w, factor)?;
    let mut out = RadioMap::zeros(h, w);
    for r in 0..h {
        for c in 0..w {
            let mut acc = 0.0f64;
            for dr in 0..factor {
                for dc in 0..factor {
                    acc += map.at(r * factor + dr, c * factor + dc) as f64;
                }
            }
            out.set(r, c, (acc / (factor * factor) as f64) as f32);
        }
    }
    Ok(out)
}

/// Downsample an occupancy grid by an integer factor. A block becomes a
/// building cell when at least half of it is building (ties round to 1).
pub fn avg_pool_buildings(map: &BuildingMap, factor: usize) -> Result<BuildingMap> {
    let (h, w) = pooled_dims(map.h, map.w, factor)?;
    let mut out = BuildingMap::zeros(h, w);
    let half = factor * factor; // occupancy fraction >= 0.5  <=>  2 * count >= factor^2
    for r in 0..h {
        for c in 0..w {
            let mut count = 0usize;
            for dr in 0..factor {
                for dc in 0..factor {
                    count += map.at(r * factor + dr, c * factor + dc) as usize;
                }
            }
            out.set(r, c, u8::from(2 * count >= half));
        }
    }
    Ok(out)
}

fn pooled_dims(h: usize, w: usize, factor: usize) -> Result<(usize, usize)> {
    if factor == 0 {
        return Err(Error::Dimension("pooling factor 0".into()));
    }
    if h % factor != 0 || w % factor != 0 {
        return Err(Error::Dimension(format!(
            "pooling factor {factor} does not divide {h}x{w}"
        )));
    }
    Ok((h / factor, w / factor))
}

/// Cut the window starting at `origin` (row, col) with shape `size` (h, w)
/// out of a map pair, shifting sample coordinates into window space and
/// dropping points that fall outside.
pub fn crop(
    map: &RadioMap,
    buildings: &BuildingMap,
    origin: (usize, usize),
    size: (usize, usize),
    points: &SampleSet,
) -> Result<(RadioMap, BuildingMap, SampleSet)> {
    if map.h != buildings.h || map.w != buildings.w {
        return Err(Error::Dimension(format!(
            "map {}x{} vs occupancy {}x{}",
            map.h, map.w, buildings.h, buildings.w
        )));
    }
    let (or, oc) = origin;
    let (ch, cw) = size;
    if ch == 0 || cw == 0 {
        return Err(Error::Dimension("empty crop window".into()));
    }
    if or + ch > map.h || oc + cw > map.w {
        return Err(Error::Dimension(format!(
            "crop {}x{} at ({}, {}) exceeds {}x{}",
            ch, cw, or, oc, map.h, map.w
        )));
    }
    let mut out_map = RadioMap::zeros(ch, cw);
    let mut out_b = BuildingMap::zeros(ch, cw);
    for r in 0..ch {
        for c in 0..cw {
            out_map.set(r, c, map.at(or + r, oc + c));
            out_b.set(r, c, buildings.at(or + r, oc + c));
        }
    }
    let inside = |row: usize, col: usize| row >= or && row < or + ch && col >= oc && col < oc + cw;
    let mut out_points = SampleSet::default();
    for p in &points.known {
        if inside(p.row, p.col) {
            out_points.known.push(crate::sample::KnownPoint {
                row: p.row - or,
                col: p.col - oc,
                value: p.value,
            });
        }
    }
    for p in &points.query {
        if inside(p.row, p.col) {
            out_points.query.push(crate::sample::QueryPoint {
                row: p.row - or,
                col: p.col - oc,
                truth: p.truth,
            });
        }
    }
    for &(row, col) in &points.remaining {
        if inside(row, col) {
            out_points.remaining.push((row - or, col - oc));
        }
    }
    Ok((out_map, out_b, out_points))
}
