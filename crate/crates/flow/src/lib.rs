//! Dense optical-flow data model and the warping machinery built on it.
//!
//! A [`FlowField`] stores forward flow in pixels: pixel `p` in frame `k`
//! moves to `p + (u[p], v[p])` in frame `k+1`, row-major, y pointing down.
//! The crate provides synthetic flow generators, flow composition, the
//! Middlebury `.flo` codec, backward-bilinear frame warping, and coverage
//! accounting for forward transport.

mod field;
mod flo;
mod frame;
mod synth;
mod warp;

pub use field::{coverage_map, lineage_pairs, CoverageMap, FlowField};
pub use flo::{decode_flo, encode_flo, FLO_MAGIC};
pub use frame::Frame;
pub use synth::{compose_flow, make_synthetic_flow, FlowKind};
pub use warp::{warp_frame, WarpMode};

use thiserror::Error;

/// Errors produced by flow construction, warping and `.flo` decoding.
#[derive(Debug, Error)]
pub enum FlowError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("flow data contains non-finite values")]
    NonFinite,
    #[error("bad magic: expected {expected} got {found}")]
    BadMagic { expected: f32, found: f32 },
    #[error("truncated stream: need {needed} bytes, have {have}")]
    Truncated { needed: usize, have: usize },
    #[error("invalid dimensions {width}x{height}")]
    BadDims { width: i32, height: i32 },
}

/// Crate version, recorded in experiment run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
