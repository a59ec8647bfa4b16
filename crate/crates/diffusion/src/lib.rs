//! A fully analyzable Gaussian video diffusion world.
//!
//! Videos are exact warps of a Gaussian first frame (plus optional
//! per-frame perturbation), warp operators are pixel permutations, and
//! the optimal denoiser is a closed-form Gaussian posterior mean. That
//! makes denoiser equivariance, sampling-trajectory geometry and one-step
//! distillation numerically checkable instead of anecdotal.

mod denoiser;
mod distance;
mod dmd;
mod model;
mod sampler;

pub use denoiser::{
    analytic_denoiser, analytic_denoiser_family, equivariance_error, fit_linear_denoiser,
    DenoiserSlice, LinearDenoiser, Provenance, TrainConfig,
};
pub use distance::{noise_video_distance, DistanceStats};
pub use dmd::{
    dmd_distill, dmd_gradient, reverse_kl, reverse_kl_gradient, DmdConfig, DmdLogEntry,
    DmdTrainLog, LinearGenerator,
};
pub use model::{
    make_synthetic_model, noise_cov, CovKind, ExactWarp, ModelSpec, NoiseMode,
    SyntheticVideoModel, WarpStepKind,
};
pub use sampler::{
    pf_ode_sample, sampler_error_vs_steps, trajectory_straightness, SigmaSchedule, StepsRow,
    TrajectoryRecord,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ToyError {
    #[error("non-exact warp requested: {0}")]
    NonExactWarp(String),
    #[error("invalid model spec: {0}")]
    BadSpec(String),
    #[error("linear system is singular beyond jitter (condition estimate {cond:.3e})")]
    Singular { cond: f64 },
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("distillation diverged at iteration {iter}: covariance error {cov_err:.3e} exceeds 10x initial {initial:.3e}")]
    Diverged { iter: usize, cov_err: f64, initial: f64 },
    #[error("trajectory has zero path length")]
    ZeroPath,
    #[error(transparent)]
    Noise(#[from] eqvt_noise::NoiseError),
    #[error(transparent)]
    Metric(#[from] eqvt_metrics::MetricError),
}

/// Crate version, recorded in experiment run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
