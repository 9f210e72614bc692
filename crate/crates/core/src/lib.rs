//! Radio-map estimation toolkit.
//!
//! The pieces, roughly in pipeline order:
//!   - [`grid`]: geographic extents, raster maps, coordinate and value transforms.
//!   - [`sample`]: sparse sample sets and the known/query mask protocol.
//!   - [`ingest`]: building footprints, spectrum sweeps, scene assembly and the
//!     on-disk scene format.
//!   - [`synth`]: deterministic synthetic map generator (log-distance path loss
//!     with wall attenuation and shadow noise).
//!   - [`pit`]: the pixel transformer, its training loop and single-step
//!     test-time adaptation.
//!   - [`kriging`]: ordinary-kriging baseline with variogram fitting.
//!   - [`eval`]: evaluation harness and method comparison.

pub mod error;
pub mod eval;
pub mod grid;
pub mod ingest;
pub mod kriging;
pub mod pit;
pub mod sample;
pub mod seeds;
pub mod synth;

pub use error::{Error, Result};
