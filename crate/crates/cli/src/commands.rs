//! Subcommand implementations. Every command resolves its config,
//! prepares a self-describing run directory and writes deterministic
//! CSV (and SVG) outputs.

use crate::config::{
    load_flo_dir, parse_noise_mode, prepare_run_dir, ExperimentConfig,
};
use crate::csvio::{fmt_f64, read_numeric_csv, CsvTable};
use crate::error::CliError;
use crate::pgm::read_pgm;
use crate::svg::{line_plot, Series};
use eqvt_diffusion::{
    analytic_denoiser, analytic_denoiser_family, dmd_distill, equivariance_error,
    fit_linear_denoiser, noise_video_distance, pf_ode_sample, sampler_error_vs_steps, DmdConfig,
    NoiseMode, SigmaSchedule, TrainConfig,
};
use eqvt_metrics::{cf_psnr, MaskPolicy};
use eqvt_noise::{
    generate_warped_sequence, mix_noise, stats::gaussianity_report, MixParams, NoiseVolume,
};
use nalgebra::DVector;
use std::path::Path;

/// Flow-warped noise generation: flows in, EQVT volume out.
pub fn gen_noise(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .gen_noise
        .as_ref()
        .ok_or_else(|| CliError::config("missing [gen_noise] section"))?;
    let noise = config.noise()?;
    let flows = noise.build_flows()?;
    let dir = prepare_run_dir(config, "gen-noise")?;
    let mut volume = generate_warped_sequence(
        &flows,
        noise.width,
        noise.height,
        noise.subdiv,
        config.run.seed,
    )?;
    if noise.beta < 1.0 {
        volume = mix_noise(&volume, &MixParams { beta: noise.beta, seed: config.run.seed })?;
    }
    let out = dir.join(&section.out_file);
    std::fs::write(&out, volume.to_bytes())
        .map_err(|e| CliError::io(format!("writing {}: {e}", out.display())))?;
    println!(
        "wrote {} frames of {}x{} noise to {}",
        volume.n_frames(),
        volume.width(),
        volume.height(),
        out.display()
    );
    Ok(())
}

/// Gaussianity statistics over many seeds of the configured generator.
pub fn verify_gaussianity(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .verify_gaussianity
        .as_ref()
        .ok_or_else(|| CliError::config("missing [verify_gaussianity] section"))?;
    let noise = config.noise()?;
    let flows = noise.build_flows()?;
    let dir = prepare_run_dir(config, "verify-gaussianity")?;
    let (w, h, subdiv, beta) = (noise.width, noise.height, noise.subdiv, noise.beta);
    let base = config.run.seed;
    let report = gaussianity_report(
        move |seed| {
            let vol = generate_warped_sequence(&flows, w, h, subdiv, base ^ seed)
                .expect("generation cannot fail for validated flows");
            if beta < 1.0 {
                mix_noise(&vol, &MixParams { beta, seed: base ^ seed }).expect("valid beta")
            } else {
                vol
            }
        },
        section.n_seeds,
        section.alpha,
    );
    let mut table = CsvTable::new(&[
        "frame",
        "mean",
        "variance",
        "ks_critical",
        "ks_pass_fraction",
        "mean_abs_corr",
        "corr_critical",
        "pass",
    ]);
    for f in &report.frames {
        table.row(vec![
            f.frame.to_string(),
            fmt_f64(f.mean),
            fmt_f64(f.variance),
            fmt_f64(f.ks_critical),
            fmt_f64(f.ks_pass_fraction),
            fmt_f64(f.mean_abs_corr),
            fmt_f64(f.corr_critical),
            f.pass.to_string(),
        ]);
    }
    table.write(&dir.join("gaussianity.csv"))?;
    println!(
        "gaussianity over {} seeds: overall ks pass fraction {:.4}, report {}",
        report.n_seeds,
        report.overall_ks_pass_fraction(),
        if report.pass { "PASS" } else { "FAIL" }
    );
    if !report.pass {
        return Err(CliError::numeric("gaussianity checks failed; see gaussianity.csv"));
    }
    Ok(())
}

/// Denoiser equivariance suite: analytic and fitted, per frame and mode.
pub fn equivariance(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .equivariance
        .as_ref()
        .ok_or_else(|| CliError::config("missing [equivariance] section"))?;
    let model = config.model()?.build(config.run.seed)?;
    let dir = prepare_run_dir(config, "equivariance")?;

    let mut table = CsvTable::new(&["denoiser", "noise_mode", "frame", "error"]);
    let mut op_table = CsvTable::new(&["noise_mode", "sigma", "rel_operator_error"]);
    for mode in [NoiseMode::Warped, NoiseMode::Independent] {
        let analytic = analytic_denoiser_family(&model, mode, &section.sigmas)?;
        for (frame, err) in
            equivariance_error(&analytic, &model, section.n_probes, config.run.seed)
                .iter()
                .enumerate()
        {
            table.row(vec![
                "analytic".into(),
                mode.label(),
                frame.to_string(),
                fmt_f64(*err),
            ]);
        }
        let fit_cfg = TrainConfig {
            t_min: section.t_min,
            t_max: section.t_max,
            n_levels: section.fit_levels,
            n_samples: section.fit_samples,
            lambda: None,
            seed: config.run.seed,
        };
        let fitted = fit_linear_denoiser(&model, &fit_cfg, mode)?;
        for (frame, err) in
            equivariance_error(&fitted, &model, section.n_probes, config.run.seed)
                .iter()
                .enumerate()
        {
            table.row(vec![
                "fitted".into(),
                mode.label(),
                frame.to_string(),
                fmt_f64(*err),
            ]);
        }
        for level in &fitted.levels {
            let exact = analytic_denoiser(&model, mode, level.sigma)?;
            let rel = (&level.w - &exact.w).norm() / exact.w.norm();
            op_table.row(vec![mode.label(), fmt_f64(level.sigma), fmt_f64(rel)]);
        }
    }
    table.write(&dir.join("equivariance.csv"))?;
    op_table.write(&dir.join("operator_error.csv"))?;
    println!("wrote equivariance.csv and operator_error.csv to {}", dir.display());
    Ok(())
}

/// Per-beta sampling study: consistency calibration plus mean fidelity.
pub fn beta_sweep(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .beta_sweep
        .as_ref()
        .ok_or_else(|| CliError::config("missing [beta_sweep] section"))?;
    let model = config.model()?.build(config.run.seed)?;
    if model.sigma_f <= 0.0 {
        return Err(CliError::config("beta sweep needs sigma_f > 0 to have content to match"));
    }
    let dir = prepare_run_dir(config, "beta-sweep")?;
    let flows = model.step_flows();
    let sched = SigmaSchedule::new(section.n_steps, section.sigma_max, section.sigma_min)?;
    let p = model.p();
    let mu = model.mu_v();

    // Consistency reference: real model samples through the same
    // cross-frame pipeline.
    use rayon::prelude::*;
    let cf_data_db: f64 = (0..section.n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let v = model.sample_video_one(config.run.seed ^ 0xDA7A, i);
            cf_psnr(&model.state_to_frames(&v), &flows, MaskPolicy::Coverage, 1.0)
                .expect("consistent model frames")
                .mean_db
        })
        .sum::<f64>()
        / section.n_seeds as f64;
    let cf_mse_data = (10f64).powf(-cf_data_db / 10.0);

    let mut table = CsvTable::new(&[
        "beta",
        "cf_psnr_db",
        "cf_mse",
        "mean_recon_err",
        "consistency_err",
        "fidelity_err",
        "composite_err",
    ]);
    let mut best: Option<(f64, f64)> = None;
    for &beta in &section.betas {
        let mode = NoiseMode::Mixed { beta };
        let den = analytic_denoiser_family(&model, mode, &sched.sigmas())?;
        let results: Vec<(DVector<f64>, f64)> = (0..section.n_seeds as u64)
            .into_par_iter()
            .map(|i| {
                let noise = model.noise_volume(mode, config.run.seed, i);
                let x = pf_ode_sample(&den, &noise, &sched).expect("solve").0;
                let cf = cf_psnr(&model.state_to_frames(&x), &flows, MaskPolicy::Coverage, 1.0)
                    .expect("consistent frames")
                    .mean_db;
                (x, cf)
            })
            .collect();
        let mean =
            results.iter().fold(DVector::zeros(p), |acc, (x, _)| acc + x) / section.n_seeds as f64;
        let cf_db = results.iter().map(|(_, c)| c).sum::<f64>() / section.n_seeds as f64;
        let cf_mse = (10f64).powf(-cf_db / 10.0);
        let mean_err = (&mean - &mu).norm_squared() / p as f64;
        let consistency = (cf_mse - cf_mse_data).abs() / cf_mse_data;
        let fidelity = mean_err / (model.sigma_f * model.sigma_f);
        let composite = consistency + fidelity;
        table.row(vec![
            fmt_f64(beta),
            fmt_f64(cf_db),
            fmt_f64(cf_mse),
            fmt_f64(mean_err),
            fmt_f64(consistency),
            fmt_f64(fidelity),
            fmt_f64(composite),
        ]);
        if best.map(|(_, c)| composite < c).unwrap_or(true) {
            best = Some((beta, composite));
        }
    }
    table.write(&dir.join("beta_sweep.csv"))?;
    if let Some((beta, composite)) = best {
        println!(
            "beta sweep: best composite error {composite:.4} at beta {beta} (data cf {:.2} dB)",
            cf_data_db
        );
    }
    Ok(())
}

/// Terminal error, straightness and consistency versus step count.
pub fn steps_sweep(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .steps_sweep
        .as_ref()
        .ok_or_else(|| CliError::config("missing [steps_sweep] section"))?;
    let model = config.model()?.build(config.run.seed)?;
    let dir = prepare_run_dir(config, "steps-sweep")?;
    let modes = section
        .modes
        .iter()
        .map(|m| parse_noise_mode(m))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = sampler_error_vs_steps(
        &model,
        &modes,
        &section.steps,
        section.n_seeds,
        section.sigma_max,
        section.sigma_min,
        config.run.seed,
    )?;
    let mut table =
        CsvTable::new(&["mode", "steps", "terminal_err", "straightness", "cf_psnr_db"]);
    for r in &rows {
        table.row(vec![
            r.mode.label(),
            r.n_steps.to_string(),
            fmt_f64(r.mean_terminal_err),
            fmt_f64(r.mean_straightness),
            fmt_f64(r.mean_cf_psnr),
        ]);
    }
    table.write(&dir.join("steps_sweep.csv"))?;
    println!("wrote steps_sweep.csv with {} rows to {}", rows.len(), dir.display());
    Ok(())
}

/// Noise-to-video distance over the configured betas.
pub fn distance(config: &ExperimentConfig) -> Result<(), CliError> {
    let section = config
        .distance
        .as_ref()
        .ok_or_else(|| CliError::config("missing [distance] section"))?;
    let model = config.model()?.build(config.run.seed)?;
    let dir = prepare_run_dir(config, "distance")?;
    let mut table = CsvTable::new(&["beta", "mean_sq_per_elem", "root_dist_per_elem"]);
    for &beta in &section.betas {
        let stats = noise_video_distance(
            &model,
            NoiseMode::Mixed { beta },
            section.n_samples,
            config.run.seed,
        );
        table.row(vec![
            fmt_f64(beta),
            fmt_f64(stats.mean_sq_per_elem),
            fmt_f64(stats.mean_root_per_elem),
        ]);
    }
    table.write(&dir.join("distance.csv"))?;
    println!("wrote distance.csv to {}", dir.display());
    Ok(())
}

/// One-step distillation run with convergence log.
pub fn dmd(config: &ExperimentConfig) -> Result<(), CliError> {
    let section =
        config.dmd.as_ref().ok_or_else(|| CliError::config("missing [dmd] section"))?;
    let model = config.model()?.build(config.run.seed)?;
    let dir = prepare_run_dir(config, "dmd")?;
    let mode = parse_noise_mode(&section.mode)?;
    let cfg = DmdConfig {
        step_size: section.step_size,
        iterations: section.iterations,
        t_min: section.t_min,
        t_max: section.t_max,
        seed: config.run.seed,
        log_every: section.log_every,
    };
    let (gen, log) = dmd_distill(&model, mode, &cfg)?;
    let mut table = CsvTable::new(&["iter", "mean_err", "cov_err"]);
    for e in &log.entries {
        table.row(vec![e.iter.to_string(), fmt_f64(e.mean_err), fmt_f64(e.cov_err)]);
    }
    table.write(&dir.join("dmd_log.csv"))?;
    let sv = model.sigma_v();
    let sn = eqvt_diffusion::noise_cov(&model, mode);
    let rel = (gen.pushforward_cov(&sn) - &sv).norm() / sv.norm();
    println!(
        "distilled {} generator: final covariance error {:.4e} (relative {rel:.4})",
        mode.label(),
        log.entries.last().map(|e| e.cov_err).unwrap_or(f64::NAN)
    );
    Ok(())
}

/// Cross-frame PSNR over a frame directory (or EQVT volume) and a
/// directory of `.flo` flows.
pub fn cf_psnr_cmd(config: &ExperimentConfig) -> Result<(), CliError> {
    let section =
        config.cf_psnr.as_ref().ok_or_else(|| CliError::config("missing [cf_psnr] section"))?;
    let dir = prepare_run_dir(config, "cf-psnr")?;
    let frames = load_frames(&section.frames)?;
    let flows = load_flo_dir(&section.flow_dir)?;
    let policy = match section.mask.as_str() {
        "coverage" => MaskPolicy::Coverage,
        "none" => MaskPolicy::None,
        other => return Err(CliError::config(format!("unknown mask policy '{other}'"))),
    };
    let report = cf_psnr(&frames, &flows, policy, section.peak)?;
    let mut table = CsvTable::new(&["pair", "value_db", "coverage_fraction"]);
    for p in &report.pairs {
        table.row(vec![
            p.pair.to_string(),
            fmt_f64(p.value_db),
            fmt_f64(p.coverage_fraction),
        ]);
    }
    table.write(&dir.join("cf_psnr.csv"))?;
    println!("cf-psnr over {} pairs: mean {:.3} dB", report.pairs.len(), report.mean_db);
    Ok(())
}

fn load_frames(path: &Path) -> Result<Vec<eqvt_flow::Frame>, CliError> {
    if path.is_file() {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
        let volume = NoiseVolume::from_bytes(&bytes)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        return Ok(volume.frames().to_vec());
    }
    let mut paths: Vec<_> = std::fs::read_dir(path)
        .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "pgm").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::config(format!("no .pgm frames in {}", path.display())));
    }
    paths.iter().map(|p| read_pgm(p)).collect()
}

/// CSV to SVG line plot.
pub fn plot(config: &ExperimentConfig) -> Result<(), CliError> {
    let section =
        config.plot.as_ref().ok_or_else(|| CliError::config("missing [plot] section"))?;
    let dir = prepare_run_dir(config, "plot")?;
    let (header, rows) = read_numeric_csv(&section.input)?;
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("column '{name}' not in CSV header")))
    };
    let xi = col(&section.x)?;
    let mut series = Vec::new();
    for y in &section.y {
        let yi = col(y)?;
        series.push(Series {
            label: y.clone(),
            points: rows.iter().map(|r| (r[xi], r[yi])).collect(),
        });
    }
    let svg = line_plot(&series, &section.title, &section.x, "value");
    let out = dir.join(&section.out_file);
    std::fs::write(&out, svg)
        .map_err(|e| CliError::io(format!("writing {}: {e}", out.display())))?;
    println!("wrote {}", out.display());
    Ok(())
}
