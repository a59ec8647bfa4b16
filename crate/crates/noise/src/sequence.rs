//! Warped noise sequences: chained particle transport over a flow list.

use crate::particle::{advect_particles, aggregate, init_particles};
use crate::rng::{CounterRng, CLASS_INDEPENDENT};
use crate::volume::{NoiseVolume, VolumeMeta};
use crate::NoiseError;
use eqvt_flow::{FlowField, Frame};

/// Generates `flows.len() + 1` noise frames: frame 0 aggregates a fresh
/// particle grid, then each frame aggregates the grid advected along the
/// next flow. Grids are carried forward, so consistency chains across
/// the whole sequence.
pub fn generate_warped_sequence(
    flows: &[FlowField],
    width: usize,
    height: usize,
    subdiv: usize,
    seed: u64,
) -> Result<NoiseVolume, NoiseError> {
    for flow in flows {
        if flow.width() != width || flow.height() != height {
            return Err(NoiseError::Flow(eqvt_flow::FlowError::DimensionMismatch(format!(
                "flow {}x{} vs requested {}x{}",
                flow.width(),
                flow.height(),
                width,
                height
            ))));
        }
    }
    let mut grid = init_particles(width, height, subdiv, seed)?;
    let mut frames = Vec::with_capacity(flows.len() + 1);
    frames.push(aggregate(&grid)?);
    for (k, flow) in flows.iter().enumerate() {
        grid = advect_particles(&grid, flow, seed, (k + 1) as u64)?;
        frames.push(aggregate(&grid)?);
    }
    NoiseVolume::new(
        frames,
        VolumeMeta {
            seed,
            subdiv: subdiv as u32,
            beta: 1.0,
            lineage: format!("warped:{}", flows.len()),
        },
    )
}

/// Keeps frame 0 and then every `k`-th frame. A stride beyond the frame
/// count yields a single-frame volume.
pub fn temporal_subsample(volume: &NoiseVolume, k: usize) -> Result<NoiseVolume, NoiseError> {
    if k == 0 {
        return Err(NoiseError::Format("subsample stride must be at least 1".into()));
    }
    let frames: Vec<Frame> = volume.frames().iter().step_by(k).cloned().collect();
    let mut meta = volume.meta.clone();
    meta.lineage = format!("{}|subsample:{k}", meta.lineage);
    NoiseVolume::new(frames, meta)
}

/// Temporally independent volume: every frame is fresh unit-Gaussian
/// noise from the counter stream keyed by `(seed, frame, pixel)`.
pub fn independent_volume(
    width: usize,
    height: usize,
    n_frames: usize,
    seed: u64,
) -> Result<NoiseVolume, NoiseError> {
    if width == 0 || height == 0 || n_frames == 0 {
        return Err(NoiseError::ZeroDims);
    }
    let rng = CounterRng::new(seed, CLASS_INDEPENDENT);
    let frames: Vec<Frame> = (0..n_frames)
        .map(|k| {
            Frame::from_fn(width, height, |x, y| {
                rng.standard_normal(k as u64, (y * width + x) as u64, 0) as f32
            })
        })
        .collect();
    NoiseVolume::new(
        frames,
        VolumeMeta { seed, subdiv: 1, beta: 0.0, lineage: format!("independent:{n_frames}") },
    )
}
