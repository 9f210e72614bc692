//! Sparse sample sets and the known/query mask protocol.
//!
//! A [`SampleSet`] is what the models actually see: known points carry values,
//! query points carry held-out truth for scoring, and `remaining` optionally
//! lists extra pixels to predict when a dense output is wanted.

use crate::error::{Error, Result};
use crate::grid::RadioMap;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KnownPoint {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryPoint {
    pub row: usize,
    pub col: usize,
    pub truth: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleSet {
    pub known: Vec<KnownPoint>,
    pub query: Vec<QueryPoint>,
    /// Extra pixels to predict (no truth attached); empty unless a dense
    /// output was requested.
    pub remaining: Vec<(usize, usize)>,
}

impl SampleSet {
    /// Check coordinate bounds and pixel disjointness across all three lists.
    pub fn validate(&self, h: usize, w: usize) -> Result<()> {
        let mut seen = HashSet::new();
        let mut check = |row: usize, col: usize| -> Result<()> {
            if row >= h || col >= w {
                return Err(Error::Dimension(format!(
                    "sample pixel ({row}, {col}) outside {h}x{w}"
                )));
            }
            if !seen.insert((row, col)) {
                return Err(Error::InvalidValue {
                    what: "sample set",
                    detail: format!("pixel ({row}, {col}) listed twice"),
                });
            }
            Ok(())
        };
        for p in &self.known {
            check(p.row, p.col)?;
        }
        for p in &self.query {
            check(p.row, p.col)?;
        }
        for &(row, col) in &self.remaining {
            check(row, col)?;
        }
        Ok(())
    }

    /// Fill `remaining` with every grid pixel not already known or queried.
    pub fn fill_remaining(&mut self, h: usize, w: usize) {
        let used: HashSet<(usize, usize)> = self
            .known
            .iter()
            .map(|p| (p.row, p.col))
            .chain(self.query.iter().map(|p| (p.row, p.col)))
            .collect();
        self.remaining.clear();
        for row in 0..h {
            for col in 0..w {
                if !used.contains(&(row, col)) {
                    self.remaining.push((row, col));
                }
            }
        }
    }
}

/// A labeled pixel available for mask sampling.
pub type Candidate = (usize, usize, f64);

/// Every pixel of a dense map as a mask candidate, row-major.
pub fn map_candidates(map: &RadioMap) -> Vec<Candidate> {
    let mut out = Vec::with_capacity(map.h * map.w);
    for row in 0..map.h {
        for col in 0..map.w {
            out.push((row, col, map.at(row, col) as f64));
        }
    }
    out
}

/// Known/query counts for the test protocol: two thirds of the points are
/// revealed, the rest are scored. `round` is half-away-from-zero.
pub fn test_split_counts(n: usize) -> (usize, usize) {
    let known = (2.0 * n as f64 / 3.0).round() as usize;
    (known, n - known)
}

/// Draw disjoint known and query masks from `candidates` without replacement.
/// Deterministic in `seed`; candidate order matters, so callers must pass a
/// stable ordering.
pub fn mask_generate(
    candidates: &[Candidate],
    n_known: usize,
    n_query: usize,
    seed: u64,
) -> Result<SampleSet> {
    let need = n_known + n_query;
    if candidates.len() < need {
        return Err(Error::InsufficientPoints {
            need,
            have: candidates.len(),
        });
    }
    if n_known == 0 {
        return Err(Error::InsufficientPoints { need: 1, have: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, candidates.len(), need);
    let mut set = SampleSet::default();
    for (i, idx) in picked.iter().enumerate() {
        let (row, col, value) = candidates[idx];
        if i < n_known {
            set.known.push(KnownPoint { row, col, value });
        } else {
            set.query.push(QueryPoint {
                row,
                col,
                truth: value,
            });
        }
    }
    Ok(set)
}
