//! Linear denoisers: the exact Gaussian posterior mean and its
//! least-squares fit from simulated pairs.
//!
//! For noisy input `x = V + t·N` with jointly Gaussian `(V, N)` the
//! posterior mean is affine, `E[V|x] = b_t + W_t x` with
//! `W_t = Σ_V (Σ_V + t²Σ_N)⁻¹`. Because warp operators are permutations,
//! both the analytic solve and the empirical fit inherit the warp
//! structure of `Σ_V` row by row, bit-exactly.

use crate::model::{noise_cov, NoiseMode, SyntheticVideoModel};
use crate::ToyError;
use nalgebra::{Cholesky, DMatrix, DVector};

const SOLVE_JITTER: f64 = 1e-10;

/// One noise level of a linear denoiser: `D(x) = b + W x`.
#[derive(Debug, Clone)]
pub struct DenoiserSlice {
    pub sigma: f64,
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl DenoiserSlice {
    pub fn denoise(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.b + &self.w * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic,
    Fitted,
}

/// A family of per-level linear denoisers. Off-grid levels interpolate
/// log-linearly between neighbours and clamp at the ends.
#[derive(Debug, Clone)]
pub struct LinearDenoiser {
    /// Slices sorted by increasing sigma.
    pub levels: Vec<DenoiserSlice>,
    pub provenance: Provenance,
    pub noise_mode: NoiseMode,
}

impl LinearDenoiser {
    pub fn new(
        mut levels: Vec<DenoiserSlice>,
        provenance: Provenance,
        noise_mode: NoiseMode,
    ) -> Self {
        levels.sort_by(|a, b| a.sigma.partial_cmp(&b.sigma).unwrap());
        Self { levels, provenance, noise_mode }
    }

    pub fn dim(&self) -> usize {
        self.levels[0].w.nrows()
    }

    /// Evaluates the denoiser at `sigma`, interpolating between grid
    /// levels when needed.
    pub fn denoise(&self, x: &DVector<f64>, sigma: f64) -> DVector<f64> {
        match self.slice_weights(sigma) {
            (i, None) => self.levels[i].denoise(x),
            (i, Some((j, w))) => {
                let lo = self.levels[i].denoise(x);
                let hi = self.levels[j].denoise(x);
                lo.scale(1.0 - w) + hi.scale(w)
            }
        }
    }

    fn slice_weights(&self, sigma: f64) -> (usize, Option<(usize, f64)>) {
        let levels = &self.levels;
        if let Some(i) = levels.iter().position(|l| l.sigma == sigma) {
            return (i, None);
        }
        if sigma <= levels[0].sigma {
            return (0, None);
        }
        if sigma >= levels[levels.len() - 1].sigma {
            return (levels.len() - 1, None);
        }
        let j = levels.iter().position(|l| l.sigma > sigma).unwrap();
        let (lo, hi) = (levels[j - 1].sigma, levels[j].sigma);
        let w = (sigma.ln() - lo.ln()) / (hi.ln() - lo.ln());
        (j - 1, Some((j, w)))
    }
}

fn spd_solve(a: DMatrix<f64>) -> Result<Cholesky<f64, nalgebra::Dyn>, ToyError> {
    let diag_max = (0..a.nrows()).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
    let diag_min = (0..a.nrows()).map(|i| a[(i, i)]).fold(f64::INFINITY, f64::min);
    Cholesky::new(a).ok_or(ToyError::Singular { cond: diag_max / diag_min.max(f64::MIN_POSITIVE) })
}

/// Exact posterior-mean denoiser at noise level `sigma`:
/// `W = Σ_V (Σ_V + σ²Σ_N + jitter·I)⁻¹`, `b = μ_V - W μ_V`.
pub fn analytic_denoiser(
    model: &SyntheticVideoModel,
    mode: NoiseMode,
    sigma: f64,
) -> Result<DenoiserSlice, ToyError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(ToyError::BadConfig(format!("sigma {sigma} must be positive")));
    }
    let sigma_v = model.sigma_v();
    let sigma_n = noise_cov(model, mode);
    analytic_slice(&sigma_v, &model.mu_v(), &sigma_n, sigma)
}

fn analytic_slice(
    sigma_v: &DMatrix<f64>,
    mu_v: &DVector<f64>,
    sigma_n: &DMatrix<f64>,
    sigma: f64,
) -> Result<DenoiserSlice, ToyError> {
    let p = sigma_v.nrows();
    let mut a = sigma_v + sigma_n.scale(sigma * sigma);
    for i in 0..p {
        a[(i, i)] += SOLVE_JITTER;
    }
    let chol = spd_solve(a)?;
    // Solve A X = Σ_V column-wise; columns of Σ_V that are permutation
    // copies of each other produce bit-identical solutions, which is
    // what keeps the analytic denoiser exactly warp-structured.
    let x = chol.solve(sigma_v);
    let w = x.transpose();
    let b = mu_v - &w * mu_v;
    Ok(DenoiserSlice { sigma, w, b })
}

/// Analytic family over a fixed grid of levels.
pub fn analytic_denoiser_family(
    model: &SyntheticVideoModel,
    mode: NoiseMode,
    sigmas: &[f64],
) -> Result<LinearDenoiser, ToyError> {
    let sigma_v = model.sigma_v();
    let sigma_n = noise_cov(model, mode);
    let mu_v = model.mu_v();
    let levels = sigmas
        .iter()
        .map(|&s| analytic_slice(&sigma_v, &mu_v, &sigma_n, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinearDenoiser::new(levels, Provenance::Analytic, mode))
}

/// Training configuration for the least-squares fit.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    /// Noise levels are log-spaced over `[t_min, t_max]`.
    pub t_min: f64,
    pub t_max: f64,
    pub n_levels: usize,
    pub n_samples: usize,
    /// Ridge strength; `None` scales 1e-6 by the mean input variance.
    pub lambda: Option<f64>,
    pub seed: u64,
}

impl TrainConfig {
    pub fn level_grid(&self) -> Vec<f64> {
        if self.n_levels == 1 {
            return vec![(self.t_min * self.t_max).sqrt()];
        }
        (0..self.n_levels)
            .map(|i| {
                let f = i as f64 / (self.n_levels - 1) as f64;
                self.t_min * (self.t_max / self.t_min).powf(f)
            })
            .collect()
    }
}

/// Minimizes `Σ ‖W x + b - v‖² + λ‖W‖²` in closed form per noise level,
/// from `n_samples` simulated `(V, V_t)` pairs per level.
///
/// The cross-moment matrix is accumulated row by row in a fixed sample
/// order, so rows belonging to warped coordinates are bit-identical and
/// the fitted denoiser inherits the video's warp structure exactly.
pub fn fit_linear_denoiser(
    model: &SyntheticVideoModel,
    config: &TrainConfig,
    mode: NoiseMode,
) -> Result<LinearDenoiser, ToyError> {
    if !(config.t_min > 0.0 && config.t_max >= config.t_min) {
        return Err(ToyError::BadConfig("need 0 < t_min <= t_max".into()));
    }
    if config.n_levels == 0 || config.n_samples < 2 {
        return Err(ToyError::BadConfig("need at least one level and two samples".into()));
    }
    if config.lambda == Some(0.0) && config.n_samples < model.p() {
        return Err(ToyError::BadConfig(
            "unregularized fit needs at least p samples; set lambda > 0".into(),
        ));
    }
    let p = model.p();
    let levels = config
        .level_grid()
        .iter()
        .enumerate()
        .map(|(li, &sigma)| {
            let mut sum_v = DVector::<f64>::zeros(p);
            let mut sum_x = DVector::<f64>::zeros(p);
            let mut cross = DMatrix::<f64>::zeros(p, p); // Σ v xᵀ
            let mut gram = DMatrix::<f64>::zeros(p, p); // Σ x xᵀ
            for i in 0..config.n_samples {
                let index = (li * config.n_samples + i) as u64;
                let v = model.sample_video_one(config.seed, index);
                let n = model.sample_noise(mode, config.seed, index);
                let x = &v + n.scale(sigma);
                sum_v += &v;
                sum_x += &x;
                // Rank-1 accumulation in sample order: every entry of the
                // cross moments sees the same addition sequence, so rows
                // belonging to warped coordinates stay bit-identical.
                cross.ger(1.0, &v, &x, 1.0);
                gram.syger(1.0, &x, &x, 1.0);
            }
            let n = config.n_samples as f64;
            let mean_v = sum_v.scale(1.0 / n);
            let mean_x = sum_x.scale(1.0 / n);
            // Centered moments from raw sums.
            let c_vx = cross.scale(1.0 / n) - &mean_v * mean_x.transpose();
            let mut s_xx = gram.scale(1.0 / n) - &mean_x * mean_x.transpose();
            // syger fills the lower triangle; mirror it.
            for r in 0..p {
                for c in r + 1..p {
                    s_xx[(r, c)] = s_xx[(c, r)];
                }
            }
            let lambda = config.lambda.unwrap_or_else(|| {
                1e-6 * (0..p).map(|i| s_xx[(i, i)]).sum::<f64>() / p as f64
            });
            for i in 0..p {
                s_xx[(i, i)] += lambda;
            }
            let chol = spd_solve(s_xx)?;
            let w = chol.solve(&c_vx.transpose()).transpose();
            let b = &mean_v - &w * &mean_x;
            Ok(DenoiserSlice { sigma, w, b })
        })
        .collect::<Result<Vec<_>, ToyError>>()?;
    Ok(LinearDenoiser::new(levels, Provenance::Fitted, mode))
}

/// Mean relative equivariance defect per frame:
/// `‖D⁽ᵏ⁾(x) - T_k D⁽⁰⁾(x)‖ / ‖D⁽ᵏ⁾(x)‖` over random probe inputs drawn
/// from the model's noisy-video law at each of the denoiser's levels.
pub fn equivariance_error(
    denoiser: &LinearDenoiser,
    model: &SyntheticVideoModel,
    n_probes: usize,
    seed: u64,
) -> Vec<f64> {
    let (d, frames) = (model.d(), model.n_frames());
    let mut acc = vec![0.0f64; frames];
    let mut count = 0usize;
    for (li, level) in denoiser.levels.iter().enumerate() {
        for i in 0..n_probes {
            let index = (li * n_probes + i) as u64;
            let v = model.sample_video_one(seed, index);
            let n = model.sample_noise(denoiser.noise_mode, seed, index);
            let x = &v + n.scale(level.sigma);
            let out = level.denoise(&x);
            let frame0 = out.rows(0, d).into_owned();
            for (k, warp) in model.warps.iter().enumerate() {
                let expect = warp.apply(&frame0);
                let got = out.rows(k * d, d);
                let denom = got.norm();
                let defect = (got - expect).norm();
                acc[k] += if denom > 0.0 { defect / denom } else { defect };
            }
            count += 1;
        }
    }
    acc.iter().map(|a| a / count as f64).collect()
}
