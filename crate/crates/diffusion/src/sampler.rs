//! Probability-flow ODE sampling and trajectory diagnostics.
//!
//! The variance-exploding form `dx/dσ = (x - D(x, σ))/σ` is integrated
//! with Euler steps over a log-spaced σ grid plus a final step to zero.

use crate::denoiser::{analytic_denoiser_family, LinearDenoiser};
use crate::model::{NoiseMode, SyntheticVideoModel};
use crate::ToyError;
use eqvt_metrics::{cf_psnr, MaskPolicy};
use eqvt_noise::NoiseVolume;
use nalgebra::DVector;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaSchedule {
    pub n_steps: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

impl SigmaSchedule {
    pub fn new(n_steps: usize, sigma_max: f64, sigma_min: f64) -> Result<Self, ToyError> {
        if n_steps == 0 {
            return Err(ToyError::BadConfig("need at least one step".into()));
        }
        if !(sigma_max >= sigma_min && sigma_min > 0.0 && sigma_max.is_finite()) {
            return Err(ToyError::BadConfig(format!(
                "bad sigma range [{sigma_min}, {sigma_max}]"
            )));
        }
        Ok(Self { n_steps, sigma_max, sigma_min })
    }

    /// Log-spaced grid from `sigma_max` down to `sigma_min`; a single
    /// step uses `sigma_max` alone. The terminal step to zero is implicit.
    pub fn sigmas(&self) -> Vec<f64> {
        if self.n_steps == 1 {
            return vec![self.sigma_max];
        }
        (0..self.n_steps)
            .map(|i| {
                let f = i as f64 / (self.n_steps - 1) as f64;
                self.sigma_max * (self.sigma_min / self.sigma_max).powf(f)
            })
            .collect()
    }
}

/// Recorded sampling path: `(sigma, state)` pairs from `sigma_max` down
/// to the terminal state at zero.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub states: Vec<(f64, DVector<f64>)>,
    pub schedule: SigmaSchedule,
}

/// Integrates the probability-flow ODE from `x(σ_max) = σ_max · noise`.
/// Returns the terminal state and the full trajectory.
pub fn pf_ode_sample(
    denoiser: &LinearDenoiser,
    noise: &NoiseVolume,
    schedule: &SigmaSchedule,
) -> Result<(DVector<f64>, TrajectoryRecord), ToyError> {
    let p = denoiser.dim();
    let flat: Vec<f64> = noise
        .frames()
        .iter()
        .flat_map(|f| f.data().iter().map(|&v| v as f64))
        .collect();
    if flat.len() != p {
        return Err(ToyError::BadConfig(format!(
            "noise volume has {} values, denoiser expects {p}",
            flat.len()
        )));
    }
    let sigmas = schedule.sigmas();
    let mut x = DVector::from_vec(flat).scale(schedule.sigma_max);
    let mut states = Vec::with_capacity(sigmas.len() + 1);
    for (i, &sigma) in sigmas.iter().enumerate() {
        states.push((sigma, x.clone()));
        let next = if i + 1 < sigmas.len() { sigmas[i + 1] } else { 0.0 };
        let denoised = denoiser.denoise(&x, sigma);
        // Euler step of dx/dσ = (x - D)/σ.
        let drift = (&x - &denoised).scale(1.0 / sigma);
        x += drift.scale(next - sigma);
    }
    states.push((0.0, x.clone()));
    Ok((x, TrajectoryRecord { states, schedule: *schedule }))
}

/// Endpoint displacement over path length; 1 is a straight line,
/// `1 - straightness` is the reported curvature.
pub fn trajectory_straightness(traj: &TrajectoryRecord) -> Result<f64, ToyError> {
    if traj.states.len() < 2 {
        return Err(ToyError::BadConfig("trajectory needs at least two states".into()));
    }
    let chord = (&traj.states[traj.states.len() - 1].1 - &traj.states[0].1).norm();
    let mut length = 0.0;
    for pair in traj.states.windows(2) {
        length += (&pair[1].1 - &pair[0].1).norm();
    }
    if length == 0.0 {
        return Err(ToyError::ZeroPath);
    }
    Ok(chord / length)
}

/// One row of the step-sweep table.
#[derive(Debug, Clone)]
pub struct StepsRow {
    pub mode: NoiseMode,
    pub n_steps: usize,
    /// Mean terminal L2 distance to the same-seed 256-step reference.
    pub mean_terminal_err: f64,
    pub mean_straightness: f64,
    /// Mean cross-frame PSNR of the generated frames under the model's
    /// step flows, coverage-masked.
    pub mean_cf_psnr: f64,
}

pub const REFERENCE_STEPS: usize = 256;

/// Sweeps sampling-step counts per noise mode. The per-seed reference is
/// the 256-step solve of the same mode and seed. Seeds run in parallel;
/// results are reduced in seed order so worker count never changes them.
pub fn sampler_error_vs_steps(
    model: &SyntheticVideoModel,
    modes: &[NoiseMode],
    steps: &[usize],
    n_seeds: usize,
    sigma_max: f64,
    sigma_min: f64,
    seed: u64,
) -> Result<Vec<StepsRow>, ToyError> {
    let flows = model.step_flows();
    let mut rows = Vec::new();
    for &mode in modes {
        // One denoiser family serves every schedule: union of all grids.
        let mut grid: Vec<f64> = Vec::new();
        for &n in steps.iter().chain([REFERENCE_STEPS].iter()) {
            grid.extend(SigmaSchedule::new(n, sigma_max, sigma_min)?.sigmas());
        }
        grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
        grid.dedup();
        let denoiser = analytic_denoiser_family(model, mode, &grid)?;

        let reference = SigmaSchedule::new(REFERENCE_STEPS, sigma_max, sigma_min)?;
        let per_seed: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..n_seeds as u64)
            .into_par_iter()
            .map(|s| {
                let noise = model.noise_volume(mode, seed, s);
                let (ref_x, _) = pf_ode_sample(&denoiser, &noise, &reference)
                    .expect("reference solve");
                let mut errs = Vec::with_capacity(steps.len());
                let mut straight = Vec::with_capacity(steps.len());
                let mut quality = Vec::with_capacity(steps.len());
                for &n in steps {
                    let sched = SigmaSchedule::new(n, sigma_max, sigma_min).unwrap();
                    let (x, traj) = pf_ode_sample(&denoiser, &noise, &sched).unwrap();
                    errs.push((&x - &ref_x).norm());
                    straight.push(trajectory_straightness(&traj).unwrap());
                    let frames = model.state_to_frames(&x);
                    if flows.is_empty() {
                        quality.push(f64::NAN);
                    } else {
                        quality.push(
                            cf_psnr(&frames, &flows, MaskPolicy::Coverage, 1.0)
                                .expect("model frames and flows are consistent")
                                .mean_db,
                        );
                    }
                }
                (errs, straight, quality)
            })
            .collect();

        for (i, &n) in steps.iter().enumerate() {
            let mean = |f: &dyn Fn(&(Vec<f64>, Vec<f64>, Vec<f64>)) -> f64| {
                per_seed.iter().map(|t| f(t)).sum::<f64>() / n_seeds as f64
            };
            rows.push(StepsRow {
                mode,
                n_steps: n,
                mean_terminal_err: mean(&|t| t.0[i]),
                mean_straightness: mean(&|t| t.1[i]),
                mean_cf_psnr: mean(&|t| t.2[i]),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_synthetic_model, CovKind, ModelSpec, WarpStepKind};
    use nalgebra::DMatrix;

    fn small_model(k: usize, sigma_f: f64) -> SyntheticVideoModel {
        make_synthetic_model(&ModelSpec {
            width: 3,
            height: 3,
            cov: CovKind::Isotropic { sigma0: 1.0 },
            warp_steps: vec![WarpStepKind::Shift { dx: 1, dy: 0 }; k],
            sigma_f,
            seed: 4,
        })
        .unwrap()
    }

    #[test]
    fn schedule_endpoints_and_single_step() {
        let s = SigmaSchedule::new(5, 80.0, 0.02).unwrap();
        let grid = s.sigmas();
        assert_eq!(grid.len(), 5);
        assert!((grid[0] - 80.0).abs() < 1e-12);
        assert!((grid[4] - 0.02).abs() < 1e-12);
        assert_eq!(SigmaSchedule::new(1, 80.0, 0.02).unwrap().sigmas(), vec![80.0]);
        assert!(SigmaSchedule::new(0, 80.0, 0.02).is_err());
    }

    #[test]
    fn one_step_solve_is_single_posterior_jump() {
        let model = small_model(1, 0.0);
        let sched = SigmaSchedule::new(1, 10.0, 0.02).unwrap();
        let den = analytic_denoiser_family(&model, NoiseMode::Warped, &sched.sigmas()).unwrap();
        let noise = model.noise_volume(NoiseMode::Warped, 3, 0);
        let (x, traj) = pf_ode_sample(&den, &noise, &sched).unwrap();
        let flat: Vec<f64> =
            noise.frames().iter().flat_map(|f| f.data().iter().map(|&v| v as f64)).collect();
        let init = DVector::from_vec(flat).scale(10.0);
        let expect = den.levels[0].denoise(&init);
        assert!((x - expect).norm() < 1e-10);
        assert_eq!(traj.states.len(), 2);
        assert_eq!(traj.states[1].0, 0.0);
    }

    #[test]
    fn straightness_of_collinear_and_right_angle_paths() {
        let sched = SigmaSchedule::new(3, 1.0, 0.1).unwrap();
        let line = TrajectoryRecord {
            states: vec![
                (1.0, DVector::from_vec(vec![0.0, 0.0])),
                (0.5, DVector::from_vec(vec![1.0, 1.0])),
                (0.0, DVector::from_vec(vec![3.0, 3.0])),
            ],
            schedule: sched,
        };
        assert!((trajectory_straightness(&line).unwrap() - 1.0).abs() < 1e-12);

        let bend = TrajectoryRecord {
            states: vec![
                (1.0, DVector::from_vec(vec![0.0, 0.0])),
                (0.5, DVector::from_vec(vec![1.0, 0.0])),
                (0.0, DVector::from_vec(vec![1.0, 1.0])),
            ],
            schedule: sched,
        };
        let s = trajectory_straightness(&bend).unwrap();
        assert!((s - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let stuck = TrajectoryRecord {
            states: vec![
                (1.0, DVector::from_vec(vec![1.0, 1.0])),
                (0.0, DVector::from_vec(vec![1.0, 1.0])),
            ],
            schedule: sched,
        };
        assert!(matches!(trajectory_straightness(&stuck), Err(ToyError::ZeroPath)));
    }

    #[test]
    fn long_solves_reproduce_model_moments() {
        // Gaussian ground truth: the 256-step terminal ensemble must
        // match the model mean and covariance.
        let model = small_model(1, 0.0);
        let sched = SigmaSchedule::new(256, 80.0, 0.02).unwrap();
        let den = analytic_denoiser_family(&model, NoiseMode::Independent, &sched.sigmas()).unwrap();
        let n = 10_000usize;
        let p = model.p();
        let samples: Vec<DVector<f64>> = (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let noise = model.noise_volume(NoiseMode::Independent, 17, i);
                pf_ode_sample(&den, &noise, &sched).unwrap().0
            })
            .collect();
        let mean = samples.iter().fold(DVector::zeros(p), |a, v| a + v) / n as f64;
        let mut cov = DMatrix::<f64>::zeros(p, p);
        for v in &samples {
            let c = v - &mean;
            cov += &c * c.transpose();
        }
        cov /= n as f64;
        let mu = model.mu_v();
        let sv = model.sigma_v();
        let mean_err = (&mean - &mu).norm() / (p as f64).sqrt();
        let cov_err = (&cov - &sv).norm() / sv.norm();
        assert!(mean_err < 0.02, "mean error {mean_err}");
        assert!(cov_err < 0.05, "covariance error {cov_err}");
    }

    #[test]
    fn steps_sweep_reference_error_is_zero_at_reference_steps() {
        let model = small_model(1, 0.0);
        let rows = sampler_error_vs_steps(
            &model,
            &[NoiseMode::Warped],
            &[REFERENCE_STEPS],
            4,
            80.0,
            0.02,
            5,
        )
        .unwrap();
        assert!(rows[0].mean_terminal_err < 1e-9, "{}", rows[0].mean_terminal_err);
    }

    #[test]
    fn errors_shrink_with_more_steps() {
        let model = small_model(2, 0.0);
        let rows = sampler_error_vs_steps(
            &model,
            &[NoiseMode::Independent, NoiseMode::Warped],
            &[2, 8, 32],
            6,
            80.0,
            0.02,
            6,
        )
        .unwrap();
        for chunk in rows.chunks(3) {
            assert!(chunk[0].mean_terminal_err >= chunk[1].mean_terminal_err);
            assert!(chunk[1].mean_terminal_err >= chunk[2].mean_terminal_err);
        }
    }
}
