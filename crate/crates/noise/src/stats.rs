//! Sample-based verification that noise volumes are what they claim:
//! unit-Gaussian per pixel, spatially uncorrelated within a frame.
//!
//! Thresholds are calibrated by Monte-Carlo under the null rather than
//! taken from asymptotics, so the suite is honest at the exact sample
//! sizes it runs at.

use crate::rng::{CounterRng, CLASS_CALIBRATION};
use crate::NoiseVolume;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

/// Kolmogorov-Smirnov statistic of a sample against N(0, 1).
pub fn ks_statistic_normal(sample: &[f32]) -> f64 {
    let mut sorted: Vec<f64> = sample.iter().map(|&v| v as f64).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN in noise samples"));
    let normal = Normal::new(0.0, 1.0).unwrap();
    let n = sorted.len() as f64;
    let mut sup = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let cdf = normal.cdf(*x);
        sup = sup.max((cdf - i as f64 / n).abs()).max(((i + 1) as f64 / n - cdf).abs());
    }
    sup
}

/// Monte-Carlo `(1 - alpha)` quantile of the KS statistic under the null
/// for samples of size `n`. Deterministic for a fixed calibration seed.
pub fn ks_critical_normal(n: usize, alpha: f64, n_reps: usize, seed: u64) -> f64 {
    let rng = CounterRng::new(seed, CLASS_CALIBRATION);
    let mut stats: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let sample: Vec<f32> =
                (0..n as u64).map(|i| rng.standard_normal(rep, i, 0) as f32).collect();
            ks_statistic_normal(&sample)
        })
        .collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = (((1.0 - alpha) * n_reps as f64).ceil() as usize).clamp(1, n_reps) - 1;
    stats[idx]
}

/// Null `(1 - alpha)` quantile of the mean absolute correlation over
/// `n_pairs` pixel pairs estimated from `n_seeds` draws each.
pub fn corr_critical(n_seeds: usize, n_pairs: usize, alpha: f64, n_reps: usize, seed: u64) -> f64 {
    let rng = CounterRng::new(seed, CLASS_CALIBRATION);
    let mut stats: Vec<f64> = (0..n_reps as u64)
        .into_par_iter()
        .map(|rep| {
            let mut acc = 0.0;
            for pair in 0..n_pairs as u64 {
                let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
                for s in 0..n_seeds as u64 {
                    let (x, y) = rng.normal_pair(rep, pair * n_seeds as u64 + s, 1);
                    sxy += x * y;
                    sxx += x * x;
                    syy += y * y;
                }
                acc += (sxy / (sxx * syy).sqrt()).abs();
            }
            acc / n_pairs as f64
        })
        .collect();
    stats.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = (((1.0 - alpha) * n_reps as f64).ceil() as usize).clamp(1, n_reps) - 1;
    stats[idx]
}

/// Per-frame summary across seeds.
#[derive(Debug, Clone)]
pub struct FrameGaussianity {
    pub frame: usize,
    /// Pooled mean over all seeds and pixels.
    pub mean: f64,
    /// Pooled variance over all seeds and pixels.
    pub variance: f64,
    /// Fraction of per-seed KS statistics below the calibrated critical
    /// value.
    pub ks_pass_fraction: f64,
    pub ks_critical: f64,
    /// Mean absolute correlation over the fixed pixel pairs.
    pub mean_abs_corr: f64,
    pub corr_critical: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct StatsReport {
    pub alpha: f64,
    pub n_seeds: usize,
    pub frames: Vec<FrameGaussianity>,
    pub pass: bool,
}

impl StatsReport {
    /// Fraction of all (seed, frame) KS statistics below critical.
    pub fn overall_ks_pass_fraction(&self) -> f64 {
        let total: f64 = self.frames.iter().map(|f| f.ks_pass_fraction).sum();
        total / self.frames.len() as f64
    }
}

const CALIBRATION_REPS: usize = 2000;
const CALIBRATION_SEED: u64 = 0x5EED_CA1B;
const VARIANCE_BAND: f64 = 0.03;

/// Runs the Gaussianity suite over `n_seeds` volumes produced by
/// `volume_for_seed` (same flows, varying seed). Per (seed, frame) the
/// pooled pixel sample is tested by KS against N(0, 1) at a Monte-Carlo
/// calibrated critical value; pooled mean/variance and spatial
/// correlations at fixed adjacent pixel pairs are checked as well.
pub fn gaussianity_report<F>(volume_for_seed: F, n_seeds: usize, alpha: f64) -> StatsReport
where
    F: Fn(u64) -> NoiseVolume + Sync,
{
    assert!(n_seeds >= 2, "need at least two seeds");
    assert!(alpha > 0.0 && alpha < 0.5, "alpha must be in (0, 0.5)");

    let probe = volume_for_seed(0);
    let (w, h, n_frames) = (probe.width(), probe.height(), probe.n_frames());
    let n_pixels = w * h;

    // Fixed horizontally adjacent probe pairs spread over the image.
    let n_pairs = 32.min(n_pixels / 2).max(1);
    let pair_stride = (n_pixels / n_pairs).max(2);
    let pairs: Vec<(usize, usize)> = (0..n_pairs)
        .map(|i| {
            let a = (i * pair_stride) % n_pixels;
            let b = if a % w + 1 < w { a + 1 } else { a - 1 };
            (a, b)
        })
        .collect();

    let ks_crit = ks_critical_normal(n_pixels, alpha, CALIBRATION_REPS, CALIBRATION_SEED);
    let corr_crit = corr_critical(n_seeds, pairs.len(), alpha, CALIBRATION_REPS, CALIBRATION_SEED);

    struct SeedStats {
        sums: Vec<f64>,
        sq_sums: Vec<f64>,
        ks_pass: Vec<u32>,
        pair_prod: Vec<f64>,
        pair_sq_a: Vec<f64>,
        pair_sq_b: Vec<f64>,
    }

    let per_seed: Vec<SeedStats> = (0..n_seeds as u64)
        .into_par_iter()
        .map(|seed| {
            let vol = volume_for_seed(seed);
            assert_eq!(
                (vol.width(), vol.height(), vol.n_frames()),
                (w, h, n_frames),
                "volume shape must not depend on the seed"
            );
            let mut stats = SeedStats {
                sums: vec![0.0; n_frames],
                sq_sums: vec![0.0; n_frames],
                ks_pass: vec![0; n_frames],
                pair_prod: vec![0.0; n_frames * pairs.len()],
                pair_sq_a: vec![0.0; n_frames * pairs.len()],
                pair_sq_b: vec![0.0; n_frames * pairs.len()],
            };
            for k in 0..n_frames {
                let data = vol.frame(k).data();
                for &v in data {
                    stats.sums[k] += v as f64;
                    stats.sq_sums[k] += (v as f64) * (v as f64);
                }
                if ks_statistic_normal(data) < ks_crit {
                    stats.ks_pass[k] = 1;
                }
                for (p, &(a, b)) in pairs.iter().enumerate() {
                    let (x, y) = (data[a] as f64, data[b] as f64);
                    stats.pair_prod[k * pairs.len() + p] += x * y;
                    stats.pair_sq_a[k * pairs.len() + p] += x * x;
                    stats.pair_sq_b[k * pairs.len() + p] += y * y;
                }
            }
            stats
        })
        .collect();

    let n_total = (n_seeds * n_pixels) as f64;
    let frames: Vec<FrameGaussianity> = (0..n_frames)
        .map(|k| {
            let sum: f64 = per_seed.iter().map(|s| s.sums[k]).sum();
            let sq: f64 = per_seed.iter().map(|s| s.sq_sums[k]).sum();
            let mean = sum / n_total;
            let variance = sq / n_total - mean * mean;
            let ks_pass_fraction =
                per_seed.iter().map(|s| s.ks_pass[k] as f64).sum::<f64>() / n_seeds as f64;
            let mean_abs_corr = (0..pairs.len())
                .map(|p| {
                    let sxy: f64 = per_seed.iter().map(|s| s.pair_prod[k * pairs.len() + p]).sum();
                    let sxx: f64 = per_seed.iter().map(|s| s.pair_sq_a[k * pairs.len() + p]).sum();
                    let syy: f64 = per_seed.iter().map(|s| s.pair_sq_b[k * pairs.len() + p]).sum();
                    (sxy / (sxx * syy).sqrt()).abs()
                })
                .sum::<f64>()
                / pairs.len() as f64;
            let pass = ks_pass_fraction >= 1.0 - 2.0 * alpha
                && (variance - 1.0).abs() <= VARIANCE_BAND
                && mean.abs() <= VARIANCE_BAND
                && mean_abs_corr <= corr_crit;
            FrameGaussianity {
                frame: k,
                mean,
                variance,
                ks_pass_fraction,
                ks_critical: ks_crit,
                mean_abs_corr,
                corr_critical: corr_crit,
                pass,
            }
        })
        .collect();

    let pass = frames.iter().all(|f| f.pass);
    StatsReport { alpha, n_seeds, frames, pass }
}
