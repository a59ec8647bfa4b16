//! Temporally consistent Gaussian noise for diffusion sampling.
//!
//! The engine transports sub-pixel noise particles along dense optical
//! flow and re-aggregates them with a variance-restoring scaling, so each
//! frame stays exactly unit-Gaussian per pixel while consecutive frames
//! share the noise content of pixels connected by the flow. A convex
//! mixer blends warped noise with fresh independent noise, and a
//! statistics module verifies the Gaussianity claims sample-wise.

mod mixer;
mod particle;
mod rng;
mod sequence;
pub mod stats;
mod volume;

pub use mixer::{mix_noise, temporal_correlation, MixParams};
pub use particle::{advect_particles, aggregate, init_particles, Particle, ParticleGrid};
pub use rng::{
    CounterRng, CLASS_CALIBRATION, CLASS_INDEPENDENT, CLASS_LEVEL, CLASS_MIX, CLASS_NOISE,
    CLASS_PARTICLES, CLASS_PROBE, CLASS_VIDEO,
};
pub use sequence::{generate_warped_sequence, independent_volume, temporal_subsample};
pub use volume::{NoiseVolume, VolumeMeta, EQVT_MAGIC, EQVT_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error(transparent)]
    Flow(#[from] eqvt_flow::FlowError),
    #[error("dimensions must be at least 1x1")]
    ZeroDims,
    #[error("subdiv must be at least 1")]
    ZeroSubdiv,
    #[error("pixel ({x},{y}) holds no particles; advection postcondition violated")]
    EmptyPixel { x: usize, y: usize },
    #[error("beta {0} outside [0,1]")]
    BadBeta(f64),
    #[error("volume needs at least one frame with consistent dimensions")]
    BadVolume,
    #[error("flow count {flows} does not match frame count {frames} minus one")]
    FlowCount { flows: usize, frames: usize },
    #[error("no unbroken-lineage pixels between frames {0} and {1}")]
    NoLineage(usize, usize),
    #[error("container format error: {0}")]
    Format(String),
}

/// Crate version, recorded in experiment run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
