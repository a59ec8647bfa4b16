//! Synthetic video model: Gaussian first frame, exact warp chain,
//! optional per-frame perturbation.

use crate::ToyError;
use eqvt_flow::{make_synthetic_flow, FlowField, FlowKind, Frame};
use eqvt_noise::{CounterRng, NoiseVolume, VolumeMeta, CLASS_NOISE, CLASS_VIDEO};
use nalgebra::{DMatrix, DVector};

/// Exact warp operators: permutations of the pixel grid, hence exactly
/// orthogonal. Shifts wrap cyclically; rotations require a square grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpStepKind {
    Shift { dx: i32, dy: i32 },
    /// Quarter turns about the image center, `turns` in 1..=3.
    Rotate90 { turns: u8 },
}

/// A pixel permutation acting as a linear warp operator `T`.
/// `apply` computes `T v` with `(T v)[i] = v[src[i]]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactWarp {
    /// Source index for every target index.
    src: Vec<usize>,
}

impl ExactWarp {
    pub fn identity(d: usize) -> Self {
        Self { src: (0..d).collect() }
    }

    pub fn dim(&self) -> usize {
        self.src.len()
    }

    fn from_step(kind: WarpStepKind, width: usize, height: usize) -> Result<Self, ToyError> {
        let d = width * height;
        let mut src = vec![0usize; d];
        match kind {
            WarpStepKind::Shift { dx, dy } => {
                for ty in 0..height {
                    for tx in 0..width {
                        let sx = (tx as i64 - dx as i64).rem_euclid(width as i64) as usize;
                        let sy = (ty as i64 - dy as i64).rem_euclid(height as i64) as usize;
                        src[ty * width + tx] = sy * width + sx;
                    }
                }
            }
            WarpStepKind::Rotate90 { turns } => {
                if width != height {
                    return Err(ToyError::NonExactWarp(format!(
                        "quarter turns need a square grid, got {width}x{height}"
                    )));
                }
                if !(1..=3).contains(&turns) {
                    return Err(ToyError::NonExactWarp(format!("turns {turns} outside 1..=3")));
                }
                // Forward quarter turn maps source (x, y) to target
                // (w-1-y, x); invert it `turns` times per target.
                for ty in 0..height {
                    for tx in 0..width {
                        let (mut x, mut y) = (tx, ty);
                        for _ in 0..turns {
                            let (nx, ny) = (y, width - 1 - x);
                            x = nx;
                            y = ny;
                        }
                        src[ty * width + tx] = y * width + x;
                    }
                }
            }
        }
        Ok(Self { src })
    }

    /// Applies `T` to a vector: permutation copy, exact in floating point.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.src.len(), self.src.iter().map(|&s| v[s]))
    }

    /// Applies `Tᵀ = T⁻¹`.
    pub fn apply_transpose(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.src.len());
        for (t, &s) in self.src.iter().enumerate() {
            out[s] = v[t];
        }
        out
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &ExactWarp) -> ExactWarp {
        ExactWarp { src: self.src.iter().map(|&s| other.src[s]).collect() }
    }

    pub fn inverse(&self) -> ExactWarp {
        let mut src = vec![0usize; self.src.len()];
        for (t, &s) in self.src.iter().enumerate() {
            src[s] = t;
        }
        ExactWarp { src }
    }

    /// Dense matrix form of the permutation.
    pub fn matrix(&self) -> DMatrix<f64> {
        let d = self.src.len();
        let mut m = DMatrix::zeros(d, d);
        for (t, &s) in self.src.iter().enumerate() {
            m[(t, s)] = 1.0;
        }
        m
    }

    /// Source pixel index feeding each target index.
    pub fn source_indices(&self) -> &[usize] {
        &self.src
    }
}

/// First-frame covariance family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CovKind {
    Isotropic { sigma0: f64 },
    /// Squared-exponential kernel over pixel coordinates.
    SmoothKernel { sigma0: f64, length_scale: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub width: usize,
    pub height: usize,
    pub cov: CovKind,
    /// One warp step per frame transition; `K = warp_steps.len()`.
    pub warp_steps: Vec<WarpStepKind>,
    /// Per-frame perturbation scale applied to frames 1..K.
    pub sigma_f: f64,
    pub seed: u64,
}

/// The ground-truth world: `V⁽⁰⁾ ~ N(mu0, Sigma0)`,
/// `V⁽ᵏ⁾ = T_k V⁽⁰⁾ + sigma_f ε_k` with permutation warps `T_k`.
#[derive(Debug, Clone)]
pub struct SyntheticVideoModel {
    pub width: usize,
    pub height: usize,
    pub mu0: DVector<f64>,
    pub sigma0: DMatrix<f64>,
    /// Cumulative warps `T_0 = I, T_1, …, T_K`.
    pub warps: Vec<ExactWarp>,
    pub sigma_f: f64,
    pub seed: u64,
    steps: Vec<WarpStepKind>,
    chol0: DMatrix<f64>,
}

/// Noise joint law across frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseMode {
    Independent,
    Warped,
    Mixed { beta: f64 },
}

impl NoiseMode {
    pub fn label(&self) -> String {
        match self {
            NoiseMode::Independent => "independent".into(),
            NoiseMode::Warped => "warped".into(),
            NoiseMode::Mixed { beta } => format!("mixed({beta})"),
        }
    }
}

/// Builds the model: a seeded smooth mean image, the covariance per
/// kind (with 1e-8 jitter on the kernel), and the cumulative warp chain.
pub fn make_synthetic_model(spec: &ModelSpec) -> Result<SyntheticVideoModel, ToyError> {
    if spec.width == 0 || spec.height == 0 {
        return Err(ToyError::BadSpec("dimensions must be at least 1x1".into()));
    }
    if spec.sigma_f < 0.0 || !spec.sigma_f.is_finite() {
        return Err(ToyError::BadSpec(format!("sigma_f {} must be >= 0", spec.sigma_f)));
    }
    let d = spec.width * spec.height;

    // Smooth random mean: a few low-frequency cosines with seeded
    // amplitudes, scaled down with frequency.
    let rng = CounterRng::new(spec.seed, CLASS_VIDEO);
    let mut mu0 = DVector::zeros(d);
    for y in 0..spec.height {
        for x in 0..spec.width {
            let (fx, fy) =
                (x as f64 / spec.width as f64, y as f64 / spec.height as f64);
            let mut v = 0.0;
            let mut mode = 0u64;
            for kx in 0..3u64 {
                for ky in 0..3u64 {
                    let amp = rng.standard_normal(u64::MAX, mode, 0)
                        / (1.0 + (kx * kx + ky * ky) as f64);
                    let phase = rng.uniform(u64::MAX, mode, 1) * std::f64::consts::TAU;
                    v += amp
                        * (std::f64::consts::TAU * (kx as f64 * fx + ky as f64 * fy) + phase)
                            .cos();
                    mode += 1;
                }
            }
            mu0[y * spec.width + x] = 0.5 * v;
        }
    }

    let sigma0 = match spec.cov {
        CovKind::Isotropic { sigma0 } => {
            if sigma0 <= 0.0 || !sigma0.is_finite() {
                return Err(ToyError::BadSpec(format!("sigma0 {sigma0} must be positive")));
            }
            DMatrix::identity(d, d) * (sigma0 * sigma0)
        }
        CovKind::SmoothKernel { sigma0, length_scale } => {
            if sigma0 <= 0.0 || length_scale <= 0.0 {
                return Err(ToyError::BadSpec("kernel parameters must be positive".into()));
            }
            let mut m = DMatrix::zeros(d, d);
            for a in 0..d {
                let (ax, ay) = ((a % spec.width) as f64, (a / spec.width) as f64);
                for b in 0..d {
                    let (bx, by) = ((b % spec.width) as f64, (b / spec.width) as f64);
                    let r2 = (ax - bx) * (ax - bx) + (ay - by) * (ay - by);
                    m[(a, b)] = sigma0 * sigma0
                        * (-r2 / (2.0 * length_scale * length_scale)).exp();
                }
            }
            for a in 0..d {
                m[(a, a)] += 1e-8;
            }
            m
        }
    };

    let chol0 = nalgebra::Cholesky::new(sigma0.clone())
        .ok_or(ToyError::Singular { cond: f64::INFINITY })?
        .l();

    let mut warps = vec![ExactWarp::identity(d)];
    for step in &spec.warp_steps {
        let op = ExactWarp::from_step(*step, spec.width, spec.height)?;
        warps.push(op.compose(warps.last().unwrap()));
    }

    Ok(SyntheticVideoModel {
        width: spec.width,
        height: spec.height,
        mu0,
        sigma0,
        warps,
        sigma_f: spec.sigma_f,
        seed: spec.seed,
        steps: spec.warp_steps.clone(),
        chol0,
    })
}

impl SyntheticVideoModel {
    /// Pixels per frame.
    pub fn d(&self) -> usize {
        self.width * self.height
    }

    /// Number of warp steps `K`; the video has `K + 1` frames.
    pub fn k_steps(&self) -> usize {
        self.warps.len() - 1
    }

    pub fn n_frames(&self) -> usize {
        self.warps.len()
    }

    /// Stacked dimension `(K+1)·d`.
    pub fn p(&self) -> usize {
        self.n_frames() * self.d()
    }

    /// Stacked mean `[T_0 mu0; …; T_K mu0]`.
    pub fn mu_v(&self) -> DVector<f64> {
        let (d, p) = (self.d(), self.p());
        let mut mu = DVector::zeros(p);
        for (k, warp) in self.warps.iter().enumerate() {
            mu.rows_mut(k * d, d).copy_from(&warp.apply(&self.mu0));
        }
        mu
    }

    /// Stacked covariance `M Sigma0 Mᵀ + sigma_f² J` with `J` identity on
    /// frames 1..K and zero on frame 0. Blocks are permutation copies of
    /// `Sigma0`, so the warp structure is bit-exact.
    pub fn sigma_v(&self) -> DMatrix<f64> {
        let (d, p) = (self.d(), self.p());
        let mut cov = DMatrix::zeros(p, p);
        for (j, wj) in self.warps.iter().enumerate() {
            for (k, wk) in self.warps.iter().enumerate() {
                for a in 0..d {
                    let sa = wj.src[a];
                    for b in 0..d {
                        cov[(j * d + a, k * d + b)] = self.sigma0[(sa, wk.src[b])];
                    }
                }
            }
        }
        let sf2 = self.sigma_f * self.sigma_f;
        if sf2 > 0.0 {
            for k in 1..self.n_frames() {
                for a in 0..d {
                    cov[(k * d + a, k * d + a)] += sf2;
                }
            }
        }
        cov
    }

    /// Draws `n` stacked videos. Frame 0 is `mu0 + L z`; frames k >= 1
    /// are permutation copies plus optional `sigma_f` perturbation, so
    /// with `sigma_f = 0` the warp relation holds bit-exactly.
    pub fn sample_video(&self, seed: u64, n: usize) -> Vec<DVector<f64>> {
        (0..n).map(|i| self.sample_video_one(seed, i as u64)).collect()
    }

    pub fn sample_video_one(&self, seed: u64, index: u64) -> DVector<f64> {
        let rng = CounterRng::new(seed, CLASS_VIDEO);
        let (d, p) = (self.d(), self.p());
        let z = DVector::from_iterator(
            d,
            (0..d).map(|i| rng.standard_normal(index, 0, i as u64)),
        );
        let v0 = &self.mu0 + &self.chol0 * z;
        let mut v = DVector::zeros(p);
        for (k, warp) in self.warps.iter().enumerate() {
            v.rows_mut(k * d, d).copy_from(&warp.apply(&v0));
        }
        if self.sigma_f > 0.0 {
            for k in 1..self.n_frames() {
                for i in 0..d {
                    v[k * d + i] +=
                        self.sigma_f * rng.standard_normal(index, k as u64, (d + i) as u64);
                }
            }
        }
        v
    }

    /// Draws a stacked unit-marginal noise vector under `mode`, keyed by
    /// `(seed, index)`. The same underlying draws serve every mode, so
    /// sweeps over `beta` are common-random-number paired.
    pub fn sample_noise(&self, mode: NoiseMode, seed: u64, index: u64) -> DVector<f64> {
        let rng = CounterRng::new(seed, CLASS_NOISE);
        let (d, p) = (self.d(), self.p());
        let shared = DVector::from_iterator(
            d,
            (0..d).map(|i| rng.standard_normal(index, 0, i as u64)),
        );
        let mut out = DVector::zeros(p);
        let (beta, gamma) = match mode {
            NoiseMode::Independent => (0.0, 1.0),
            NoiseMode::Warped => (1.0, 0.0),
            NoiseMode::Mixed { beta } => (beta, (1.0 - beta * beta).sqrt()),
        };
        for (k, warp) in self.warps.iter().enumerate() {
            let lifted = warp.apply(&shared);
            for i in 0..d {
                let fresh = if gamma != 0.0 {
                    rng.standard_normal(index, (k + 1) as u64, i as u64)
                } else {
                    0.0
                };
                out[k * d + i] = beta * lifted[i] + gamma * fresh;
            }
        }
        out
    }

    /// Same noise packaged as a `NoiseVolume` for the sampler interface.
    pub fn noise_volume(&self, mode: NoiseMode, seed: u64, index: u64) -> NoiseVolume {
        let stacked = self.sample_noise(mode, seed, index);
        let d = self.d();
        let frames: Vec<Frame> = (0..self.n_frames())
            .map(|k| {
                Frame::from_fn(self.width, self.height, |x, y| {
                    stacked[k * d + y * self.width + x] as f32
                })
            })
            .collect();
        let beta = match mode {
            NoiseMode::Independent => 0.0,
            NoiseMode::Warped => 1.0,
            NoiseMode::Mixed { beta } => beta,
        };
        NoiseVolume::new(
            frames,
            VolumeMeta { seed, subdiv: 1, beta, lineage: format!("model:{}", mode.label()) },
        )
        .expect("model frames are consistent")
    }

    /// Per-step flow fields matching the warp chain, for metric warping.
    pub fn step_flows(&self) -> Vec<FlowField> {
        self.steps
            .iter()
            .map(|step| {
                let kind = match step {
                    WarpStepKind::Shift { dx, dy } => {
                        FlowKind::Translate { dx: *dx as f64, dy: *dy as f64 }
                    }
                    WarpStepKind::Rotate90 { turns } => FlowKind::Rotate {
                        angle: *turns as f64 * std::f64::consts::FRAC_PI_2,
                    },
                };
                make_synthetic_flow(kind, self.width, self.height)
                    .expect("exact warp kinds produce valid flows")
            })
            .collect()
    }

    /// Splits a stacked state into per-frame images.
    pub fn state_to_frames(&self, state: &DVector<f64>) -> Vec<Frame> {
        let d = self.d();
        (0..self.n_frames())
            .map(|k| {
                Frame::from_fn(self.width, self.height, |x, y| {
                    state[k * d + y * self.width + x] as f32
                })
            })
            .collect()
    }
}

/// Stacked noise covariance for a mode: identity, warp Gram blocks
/// `T_j T_kᵀ`, or their convex-in-variance mixture. Always symmetric PSD
/// with unit diagonal.
pub fn noise_cov(model: &SyntheticVideoModel, mode: NoiseMode) -> DMatrix<f64> {
    let (d, p) = (model.d(), model.p());
    match mode {
        NoiseMode::Independent => DMatrix::identity(p, p),
        NoiseMode::Warped | NoiseMode::Mixed { .. } => {
            let (b2, rest) = match mode {
                NoiseMode::Warped => (1.0, 0.0),
                NoiseMode::Mixed { beta } => (beta * beta, 1.0 - beta * beta),
                NoiseMode::Independent => unreachable!(),
            };
            let mut cov = DMatrix::zeros(p, p);
            for (j, wj) in model.warps.iter().enumerate() {
                for (k, wk) in model.warps.iter().enumerate() {
                    // (T_j T_kᵀ)[a,b] = 1 iff both target indices pull
                    // from the same shared-noise pixel.
                    let wk_inv = wk.inverse();
                    for a in 0..d {
                        let b = wk_inv.src[wj.src[a]];
                        cov[(j * d + a, k * d + b)] += b2;
                    }
                }
            }
            if rest > 0.0 {
                for i in 0..p {
                    cov[(i, i)] += rest;
                }
            }
            cov
        }
    }
}
