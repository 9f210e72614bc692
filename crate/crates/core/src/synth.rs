//! Deterministic synthetic radio maps: log-distance path loss over randomly
//! placed rectangular buildings, with per-wall attenuation and shadow noise.
//!
//! Everything is a pure function of the config, so a seed pins the entire
//! dataset bit-for-bit.

use crate::error::{Error, Result};
use crate::grid::{BuildingMap, GeoExtent, NormRange, RadioMap};
use crate::ingest::{Band, Scene, ScenePoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Distance coefficient: normalized value lost per path-loss-exponent unit
/// per decade of distance.
pub const K_D: f64 = 0.25;

/// Building side lengths in pixels, inclusive.
pub const BUILDING_SIDE_MIN: usize = 3;
pub const BUILDING_SIDE_MAX: usize = 20;

const PLACEMENT_RETRIES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthConfig {
    pub h: usize,
    pub w: usize,
    pub n_buildings: usize,
    /// Normalized transmit level at the reference distance of one pixel.
    pub p0: f64,
    /// Path-loss exponent.
    pub n_exp: f64,
    /// Normalized value lost per wall crossing.
    pub wall_loss: f64,
    /// Standard deviation of the Gaussian shadow term.
    pub shadow_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            h: 64,
            w: 64,
            n_buildings: 8,
            p0: 0.95,
            n_exp: 2.0,
            wall_loss: 0.05,
            shadow_sigma: 0.02,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.h == 0 || self.w == 0 {
            return Err(Error::InvalidConfig(format!("empty grid {}x{}", self.h, self.w)));
        }
        if self.n_buildings > 0 && (self.h < BUILDING_SIDE_MIN || self.w < BUILDING_SIDE_MIN) {
            return Err(Error::InvalidConfig(format!(
                "grid {}x{} cannot hold a building (min side {BUILDING_SIDE_MIN})",
                self.h, self.w
            )));
        }
        for (name, v, lo) in [
            ("p0", self.p0, 0.0),
            ("n_exp", self.n_exp, 0.0),
            ("wall_loss", self.wall_loss, 0.0),
            ("shadow_sigma", self.shadow_sigma, 0.0),
        ] {
            if !v.is_finite() || v < lo {
                return Err(Error::InvalidConfig(format!("{name} = {v}")));
            }
        }
        if self.p0 > 1.0 {
            return Err(Error::InvalidConfig(format!("p0 = {} exceeds 1", self.p0)));
        }
        Ok(())
    }
}

/// Every cell the segment between two pixel centers passes through, in walk
/// order. When the segment crosses a grid corner exactly, both side cells are
/// included (row neighbor first), then the diagonal cell.
pub fn supercover_cells(from: (usize, usize), to: (usize, usize)) -> Vec<(usize, usize)> {
    let (r0, c0) = (from.0 as i64, from.1 as i64);
    let (r1, c1) = (to.0 as i64, to.1 as i64);
    let dr = (r1 - r0).abs();
    let dc = (c1 - c0).abs();
    let sr = (r1 - r0).signum();
    let sc = (c1 - c0).signum();
    let mut cells = Vec::with_capacity((dr + dc + 1) as usize);
    let (mut r, mut c) = (r0, c0);
    cells.push((r as usize, c as usize));
    let mut i = 1; // next row-boundary crossing
    let mut j = 1; // next column-boundary crossing
    while i <= dr || j <= dc {
        // Crossing parameters: the i-th row boundary sits at (2i-1)/(2dr) of
        // the walk, the j-th column boundary at (2j-1)/(2dc). Compare exactly
        // with cross multiplication.
        let row_next = i <= dr;
        let col_next = j <= dc;
        let order = if row_next && col_next {
            ((2 * i - 1) * dc).cmp(&((2 * j - 1) * dr))
        } else if row_next {
            std::cmp::Ordering::Less
        } else {
            std::cmp::Ordering::Greater
        };
        match order {
            std::cmp::Ordering::Less => {
                r += sr;
                i += 1;
                cells.push((r as usize, c as usize));
            }
            std::cmp::Ordering::Greater => {
                c += sc;
                j += 1;
                cells.push((r as usize, c as usize));
            }
            std::cmp::Ordering::Equal => {
                cells.push(((r + sr) as usize, c as usize));
                cells.push((r as usize, (c + sc) as usize));
                r += sr;
                c += sc;
                i += 1;
                j += 1;
                cells.push((r as usize, c as usize));
            }
        }
    }
    cells
}

/// Number of distinct building-interior runs the segment between the two
/// pixel centers passes through.
pub fn wall_crossings(buildings: &BuildingMap, from: (usize, usize), to: (usize, usize)) -> usize {
    let mut crossings = 0usize;
    let mut in_building = false;
    for (r, c) in supercover_cells(from, to) {
        let hit = buildings.at(r, c) == 1;
        if hit && !in_building {
            crossings += 1;
        }
        in_building = hit;
    }
    crossings
}

/// One synthetic scene's ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthMap {
    pub map: RadioMap,
    pub buildings: BuildingMap,
    pub tx: (usize, usize),
}

/// Generate one map: place the transmitter uniformly, scatter buildings that
/// avoid it, then evaluate per pixel
///   clamp(p0 - K_D * n_exp * log10(max(d, 1)) - wall_loss * crossings + noise, 0, 1)
/// with d in pixels and noise ~ N(0, shadow_sigma^2) (Box-Muller, row-major
/// order, two uniform draws per pixel).
pub fn generate_map(cfg: &SynthConfig) -> Result<SynthMap> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tx = (rng.gen_range(0..cfg.h), rng.gen_range(0..cfg.w));
    let mut buildings = BuildingMap::zeros(cfg.h, cfg.w);
    for b in 0..cfg.n_buildings {
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let side_h = rng.gen_range(BUILDING_SIDE_MIN..=BUILDING_SIDE_MAX.min(cfg.h));
            let side_w = rng.gen_range(BUILDING_SIDE_MIN..=BUILDING_SIDE_MAX.min(cfg.w));
            let r0 = rng.gen_range(0..=cfg.h - side_h);
            let c0 = rng.gen_range(0..=cfg.w - side_w);
            let covers_tx =
                tx.0 >= r0 && tx.0 < r0 + side_h && tx.1 >= c0 && tx.1 < c0 + side_w;
            if covers_tx {
                continue;
            }
            for r in r0..r0 + side_h {
                for c in c0..c0 + side_w {
                    buildings.set(r, c, 1);
                }
            }
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::InvalidConfig(format!(
                "could not place building {b} clear of the transmitter"
            )));
        }
    }
    let mut map = RadioMap::zeros(cfg.h, cfg.w);
    for r in 0..cfg.h {
        for c in 0..cfg.w {
            let d = (((r as f64 - tx.0 as f64).powi(2)) + ((c as f64 - tx.1 as f64).powi(2)))
                .sqrt();
            let path = K_D * cfg.n_exp * d.max(1.0).log10();
            let walls = cfg.wall_loss * wall_crossings(&buildings, tx, (r, c)) as f64;
            let noise = if cfg.shadow_sigma > 0.0 {
                cfg.shadow_sigma * standard_normal(&mut rng)
            } else {
                0.0
            };
            let v = (cfg.p0 - path - walls + noise).clamp(0.0, 1.0);
            map.set(r, c, v as f32);
        }
    }
    Ok(SynthMap {
        map,
        buildings,
        tx,
    })
}

/// Box-Muller transform; consumes exactly two uniforms per call.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>(); // (0, 1]
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Maps for indices `0..count`; map `i` uses `cfg.seed + i`.
pub fn generate_dataset(cfg: &SynthConfig, count: usize) -> Result<Vec<SynthMap>> {
    (0..count)
        .map(|i| {
            let mut c = *cfg;
            c.seed = cfg.seed.wrapping_add(i as u64);
            generate_map(&c)
        })
        .collect()
}

/// Sample `n_points` distinct pixels of a dense truth map into a sparse scene.
pub fn sample_scene(
    truth: &SynthMap,
    n_points: usize,
    seed: u64,
    band: &Band,
    norm: &NormRange,
) -> Result<Scene> {
    let total = truth.map.h * truth.map.w;
    if n_points == 0 || n_points > total {
        return Err(Error::InsufficientPoints {
            need: n_points.max(1),
            have: total,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, total, n_points).into_vec();
    picked.sort_unstable();
    let points = picked
        .into_iter()
        .map(|idx| {
            let (row, col) = (idx / truth.map.w, idx % truth.map.w);
            ScenePoint {
                row,
                col,
                value: truth.map.at(row, col) as f64,
            }
        })
        .collect();
    let scene = Scene {
        buildings: truth.buildings.clone(),
        extent: GeoExtent::new(0.0, 1.0, 0.0, 1.0)?,
        band: *band,
        norm: *norm,
        points,
    };
    scene.validate()?;
    Ok(scene)
}
