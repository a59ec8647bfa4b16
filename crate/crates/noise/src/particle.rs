//! Sub-pixel noise particles and their transport.
//!
//! A pixel starts with `s²` particles, each holding an independent
//! `N(0, 1/s²)` value, so the per-pixel sum is exactly `N(0, 1)`.
//! Advection moves particle centers along the flow and re-bins them to
//! the pixel containing the displaced center. Bins stay disjoint, so
//! aggregation with the `sqrt(s²/n)` scaling restores unit variance for
//! any particle count and keeps pixels independent.

use crate::rng::{CounterRng, CLASS_PARTICLES};
use crate::NoiseError;
use eqvt_flow::{FlowField, Frame};

/// One transported sub-noise sample. The weight is carried for future
/// mass-weighted variants and is fixed at 1 here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Particle {
    pub value: f32,
    pub weight: f32,
    pub x: f32,
    pub y: f32,
}

/// Per-pixel particle bins plus the seed lineage they were drawn from.
#[derive(Debug, Clone)]
pub struct ParticleGrid {
    width: usize,
    height: usize,
    subdiv: usize,
    seed: u64,
    cells: Vec<Vec<Particle>>,
}

impl ParticleGrid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn subdiv(&self) -> usize {
        self.subdiv
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cell(&self, x: usize, y: usize) -> &[Particle] {
        &self.cells[y * self.width + x]
    }
}

fn fresh_cell(
    rng: &CounterRng,
    frame_index: u64,
    px: usize,
    py: usize,
    width: usize,
    subdiv: usize,
) -> Vec<Particle> {
    let pixel = (py * width + px) as u64;
    let inv_s = 1.0 / subdiv as f64;
    let x0 = px as f32 - 0.5;
    let y0 = py as f32 - 0.5;
    (0..subdiv * subdiv)
        .map(|k| {
            let value = (rng.standard_normal(frame_index, pixel, k as u64) * inv_s) as f32;
            Particle {
                value,
                weight: 1.0,
                x: x0 + ((k % subdiv) as f32 + 0.5) / subdiv as f32,
                y: y0 + ((k / subdiv) as f32 + 0.5) / subdiv as f32,
            }
        })
        .collect()
}

/// Fills every pixel with `subdiv²` fresh particles. Draws are keyed by
/// `(seed, frame 0, pixel, particle)`, so the grid is independent of
/// iteration order and thread count.
pub fn init_particles(
    width: usize,
    height: usize,
    subdiv: usize,
    seed: u64,
) -> Result<ParticleGrid, NoiseError> {
    if width == 0 || height == 0 {
        return Err(NoiseError::ZeroDims);
    }
    if subdiv == 0 {
        return Err(NoiseError::ZeroSubdiv);
    }
    let rng = CounterRng::new(seed, CLASS_PARTICLES);
    let mut cells = Vec::with_capacity(width * height);
    for py in 0..height {
        for px in 0..width {
            cells.push(fresh_cell(&rng, 0, px, py, width, subdiv));
        }
    }
    Ok(ParticleGrid { width, height, subdiv, seed, cells })
}

/// Transports every particle along the flow sampled at its center,
/// re-bins to target pixels, drops particles that leave the image and
/// refills starved pixels with fresh noise keyed by
/// `(seed, frame_index, pixel, particle)`.
pub fn advect_particles(
    grid: &ParticleGrid,
    flow: &FlowField,
    seed: u64,
    frame_index: u64,
) -> Result<ParticleGrid, NoiseError> {
    if flow.width() != grid.width || flow.height() != grid.height {
        return Err(NoiseError::Flow(eqvt_flow::FlowError::DimensionMismatch(format!(
            "grid {}x{} vs flow {}x{}",
            grid.width,
            grid.height,
            flow.width(),
            flow.height()
        ))));
    }
    let (w, h) = (grid.width, grid.height);
    let mut cells: Vec<Vec<Particle>> = vec![Vec::new(); w * h];
    // Row-major traversal keeps bin contents in a deterministic order, so
    // aggregate sums are reproducible bit for bit.
    for cell in &grid.cells {
        for p in cell {
            let (du, dv) = flow.sample(p.x, p.y);
            let (nx, ny) = (p.x + du, p.y + dv);
            let bx = (nx + 0.5).floor();
            let by = (ny + 0.5).floor();
            if bx >= 0.0 && by >= 0.0 && bx < w as f32 && by < h as f32 {
                cells[by as usize * w + bx as usize].push(Particle { x: nx, y: ny, ..*p });
            }
        }
    }
    let rng = CounterRng::new(seed, CLASS_PARTICLES);
    for py in 0..h {
        for px in 0..w {
            let idx = py * w + px;
            if cells[idx].is_empty() {
                cells[idx] = fresh_cell(&rng, frame_index, px, py, w, grid.subdiv);
            }
        }
    }
    Ok(ParticleGrid { width: w, height: h, subdiv: grid.subdiv, seed, cells })
}

/// Collapses each pixel's particles into one value:
/// `sum * sqrt(s² / n)`. With `n == s²` the scale is exactly 1, so intact
/// transported bins reproduce their source pixel bit for bit.
pub fn aggregate(grid: &ParticleGrid) -> Result<Frame, NoiseError> {
    let s2 = (grid.subdiv * grid.subdiv) as f32;
    let mut data = Vec::with_capacity(grid.width * grid.height);
    for py in 0..grid.height {
        for px in 0..grid.width {
            let cell = grid.cell(px, py);
            if cell.is_empty() {
                return Err(NoiseError::EmptyPixel { x: px, y: py });
            }
            let sum: f32 = cell.iter().map(|p| p.value).sum();
            data.push(sum * (s2 / cell.len() as f32).sqrt());
        }
    }
    Ok(Frame::new(grid.width, grid.height, data).expect("grid dims are valid"))
}
