//! Temporary calibration harness; run individual probes with --ignored.

use eqvt_diffusion::*;

fn model_8x8(k: usize, sigma_f: f64, cov: CovKind) -> SyntheticVideoModel {
    let steps = vec![
        WarpStepKind::Shift { dx: 1, dy: 0 },
        WarpStepKind::Shift { dx: 0, dy: 1 },
        WarpStepKind::Rotate90 { turns: 1 },
        WarpStepKind::Shift { dx: 1, dy: 1 },
        WarpStepKind::Shift { dx: -1, dy: 0 },
        WarpStepKind::Rotate90 { turns: 2 },
        WarpStepKind::Shift { dx: 0, dy: -1 },
        WarpStepKind::Shift { dx: 2, dy: 1 },
    ];
    make_synthetic_model(&ModelSpec {
        width: 8,
        height: 8,
        cov,
        warp_steps: steps[..k].to_vec(),
        sigma_f,
        seed: 42,
    })
    .unwrap()
}

#[test]
#[ignore]
fn probe_straightness_and_steps() {
    for (label, sigma_f, cov) in [
        ("smooth sf=0", 0.0, CovKind::SmoothKernel { sigma0: 1.0, length_scale: 2.0 }),
        ("iso sf=0", 0.0, CovKind::Isotropic { sigma0: 1.0 }),
        ("smooth sf=0.1", 0.1, CovKind::SmoothKernel { sigma0: 1.0, length_scale: 2.0 }),
    ] {
        let m = model_8x8(4, sigma_f, cov);
        let rows = sampler_error_vs_steps(
            &m,
            &[NoiseMode::Warped, NoiseMode::Independent],
            &[3, 10, 32],
            100,
            80.0,
            0.02,
            7,
        )
        .unwrap();
        println!("== {label}");
        for r in &rows {
            println!(
                "  {:12} steps {:3}: err {:9.4} straight {:.6} cf {:7.2}",
                r.mode.label(),
                r.n_steps,
                r.mean_terminal_err,
                r.mean_straightness,
                r.mean_cf_psnr
            );
        }
    }
}

#[test]
#[ignore]
fn probe_paired_straightness() {
    let m = model_8x8(4, 0.0, CovKind::SmoothKernel { sigma0: 1.0, length_scale: 2.0 });
    let grid10 = SigmaSchedule::new(10, 80.0, 0.02).unwrap();
    let mut union: Vec<f64> = grid10.sigmas();
    union.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dw = analytic_denoiser_family(&m, NoiseMode::Warped, &union).unwrap();
    let di = analytic_denoiser_family(&m, NoiseMode::Independent, &union).unwrap();
    let mut wins = 0;
    let mut diffs = Vec::new();
    for s in 0..100u64 {
        let nw = m.noise_volume(NoiseMode::Warped, 9, s);
        let ni = m.noise_volume(NoiseMode::Independent, 9, s);
        let (_, tw) = pf_ode_sample(&dw, &nw, &grid10).unwrap();
        let (_, ti) = pf_ode_sample(&di, &ni, &grid10).unwrap();
        let sw = trajectory_straightness(&tw).unwrap();
        let si = trajectory_straightness(&ti).unwrap();
        if sw > si {
            wins += 1;
        }
        diffs.push(sw - si);
    }
    let mean: f64 = diffs.iter().sum::<f64>() / diffs.len() as f64;
    println!("warped wins {wins}/100, mean diff {mean:.6}");
}

#[test]
#[ignore]
fn probe_beta_sweep() {
    use eqvt_metrics::{cf_psnr, MaskPolicy};
    for (s0, steps, seeds, smin) in [
        (0.3f64, 12usize, 3000usize, 0.15f64),
        (0.3, 12, 3000, 0.02),
        (0.3, 8, 1500, 0.15),
    ] {
        println!("== sigma0 {s0}, steps {steps}, seeds {seeds}, smin {smin}");
        let m = make_synthetic_model(&ModelSpec {
            width: 8,
            height: 8,
            cov: CovKind::SmoothKernel { sigma0: s0, length_scale: 1.5 },
            warp_steps: vec![
                WarpStepKind::Shift { dx: 1, dy: 0 },
                WarpStepKind::Shift { dx: 0, dy: 1 },
                WarpStepKind::Shift { dx: 1, dy: 1 },
            ],
            sigma_f: 0.1,
            seed: 42,
        })
        .unwrap();
        // Data reference: model samples through the same cf pipeline.
        let flows_ref = m.step_flows();
        let mut cf_data = 0.0;
        for i in 0..seeds as u64 {
            let v = m.sample_video_one(1234, i);
            cf_data += cf_psnr(&m.state_to_frames(&v), &flows_ref, MaskPolicy::Coverage, 1.0)
                .unwrap()
                .mean_db;
        }
        cf_data /= seeds as f64;
        let cf_mse_data = (10f64).powf(-cf_data / 10.0);
        println!("  data cf {cf_data:.2} (mse {cf_mse_data:.5})");
        let p = m.p();
        let mu = m.mu_v();
        let flows = m.step_flows();
        for beta in [0.0, 0.5, 0.9, 1.0] {
            let mode = NoiseMode::Mixed { beta };
            let sched = SigmaSchedule::new(steps, 80.0, smin).unwrap();
            let den = analytic_denoiser_family(&m, mode, &sched.sigmas()).unwrap();
            let mut mean = nalgebra::DVector::<f64>::zeros(p);
            let mut cf_sum = 0.0;
            for i in 0..seeds as u64 {
                let x = pf_ode_sample(&den, &m.noise_volume(mode, 3, i), &sched).unwrap().0;
                cf_sum += cf_psnr(&m.state_to_frames(&x), &flows, MaskPolicy::Coverage, 1.0)
                    .unwrap()
                    .mean_db;
                mean += &x;
            }
            mean /= seeds as f64;
            let mean_err = (&mean - &mu).norm_squared() / p as f64;
            let cf = cf_sum / seeds as f64;
            let cf_mse = (10f64).powf(-cf / 10.0);
            let consistency = (cf_mse - cf_mse_data).abs() / cf_mse_data;
            let fidelity = mean_err / (0.1 * 0.1);
            println!(
                "  beta {beta}: mean_err {mean_err:.6} cf {cf:7.2} cf_mse {cf_mse:.5} consistency {consistency:.4} fidelity {fidelity:.4} composite {:.4}",
                consistency + fidelity
            );
        }
    }
}

#[test]
#[ignore]
fn probe_fit_scale() {
    let t0 = std::time::Instant::now();
    let m = model_8x8(4, 0.0, CovKind::SmoothKernel { sigma0: 1.0, length_scale: 2.0 });
    let cfg = TrainConfig {
        t_min: 0.1,
        t_max: 10.0,
        n_levels: 3,
        n_samples: 100_000,
        lambda: None,
        seed: 5,
    };
    let fw = fit_linear_denoiser(&m, &cfg, NoiseMode::Warped).unwrap();
    println!("warped fit: {:?}", t0.elapsed());
    let fi = fit_linear_denoiser(&m, &cfg, NoiseMode::Independent).unwrap();
    println!("both fits: {:?}", t0.elapsed());
    let ew = equivariance_error(&fw, &m, 32, 8);
    let ei = equivariance_error(&fi, &m, 32, 8);
    println!("equivariance warped {ew:?}");
    println!("equivariance indep  {ei:?}");
    let exact = analytic_denoiser(&m, NoiseMode::Warped, 1.0).unwrap();
    let slice = fw.levels.iter().find(|l| (l.sigma - 1.0).abs() < 1e-9).unwrap();
    let rel = (&slice.w - &exact.w).singular_values().max() / exact.w.singular_values().max();
    println!("warped fit vs analytic at t=1: {rel:.5} (total {:?})", t0.elapsed());
    let exact_i = analytic_denoiser(&m, NoiseMode::Independent, 1.0).unwrap();
    let slice_i = fi.levels.iter().find(|l| (l.sigma - 1.0).abs() < 1e-9).unwrap();
    let rel_i =
        (&slice_i.w - &exact_i.w).singular_values().max() / exact_i.w.singular_values().max();
    println!("indep fit vs analytic at t=1: {rel_i:.5}");
}

#[test]
#[ignore]
fn probe_dmd_multivariate() {
    let t0 = std::time::Instant::now();
    let m = model_8x8(2, 0.1, CovKind::SmoothKernel { sigma0: 1.0, length_scale: 1.2 });
    for (lr, iters, tmin, tmax) in [(0.1, 2000, 0.3, 10.0), (0.2, 3000, 0.5, 10.0)] {
        let cfg = DmdConfig {
            step_size: lr,
            iterations: iters,
            t_min: tmin,
            t_max: tmax,
            seed: 3,
            log_every: 200,
        };
        match dmd_distill(&m, NoiseMode::Independent, &cfg) {
            Ok((gen, log)) => {
                let sv = m.sigma_v();
                let sn = noise_cov(&m, NoiseMode::Independent);
                let rel = (gen.pushforward_cov(&sn) - &sv).norm() / sv.norm();
                println!(
                    "lr {lr} iters {iters} t [{tmin},{tmax}]: cov rel {rel:.4}, log tail {:?}, {:?}",
                    log.entries.last(),
                    t0.elapsed()
                );
            }
            Err(e) => println!("lr {lr} iters {iters}: {e}"),
        }
    }
}
