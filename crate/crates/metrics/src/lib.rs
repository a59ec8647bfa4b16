//! Frame quality and temporal consistency metrics.
//!
//! `cf_psnr` measures how well a video follows its driving flow: frame
//! `k` is warped one step forward and compared with frame `k+1`. Flows
//! must come from the driving video, not the generated one.

use eqvt_flow::{warp_frame, FlowField, Frame, WarpMode};
use thiserror::Error;

/// Reported PSNR when the MSE is exactly zero, keeping means finite for
/// exactly-warped synthetic videos.
pub const PSNR_CAP_DB: f64 = 99.0;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("peak must be positive and finite, got {0}")]
    BadPeak(f64),
    #[error("window must be odd, at least 3 and no larger than the image, got {0}")]
    BadWindow(usize),
    #[error("need {expected} flows for {frames} frames, got {got}")]
    FlowCount { expected: usize, frames: usize, got: usize },
    #[error("metric input contains non-finite values")]
    NonFinite,
    #[error(transparent)]
    Flow(#[from] eqvt_flow::FlowError),
}

fn check_pair(a: &Frame, b: &Frame) -> Result<(), MetricError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(MetricError::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if !a.is_finite() || !b.is_finite() {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Peak signal-to-noise ratio in dB: `10 log10(peak² / MSE)`, saturated
/// at [`PSNR_CAP_DB`] for identical inputs.
pub fn psnr(a: &Frame, b: &Frame, peak: f64) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    if !(peak.is_finite() && peak > 0.0) {
        return Err(MetricError::BadPeak(peak));
    }
    let mse = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.data().len() as f64;
    Ok(psnr_from_mse(mse, peak))
}

fn psnr_from_mse(mse: f64, peak: f64) -> f64 {
    if mse == 0.0 {
        PSNR_CAP_DB
    } else {
        (10.0 * (peak * peak / mse).log10()).min(PSNR_CAP_DB)
    }
}

/// Mean local structural similarity over uniform fully-interior windows.
pub fn ssim(
    a: &Frame,
    b: &Frame,
    window: usize,
    k1: f64,
    k2: f64,
    peak: f64,
) -> Result<f64, MetricError> {
    check_pair(a, b)?;
    if !(peak.is_finite() && peak > 0.0) {
        return Err(MetricError::BadPeak(peak));
    }
    if window < 3 || window % 2 == 0 || window > a.width() || window > a.height() {
        return Err(MetricError::BadWindow(window));
    }
    let c1 = (k1 * peak) * (k1 * peak);
    let c2 = (k2 * peak) * (k2 * peak);
    let n = (window * window) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for wy in 0..=a.height() - window {
        for wx in 0..=a.width() - window {
            let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for y in wy..wy + window {
                for x in wx..wx + window {
                    let (p, q) = (a.at(x, y) as f64, b.at(x, y) as f64);
                    sa += p;
                    sb += q;
                    saa += p * p;
                    sbb += q * q;
                    sab += p * q;
                }
            }
            let (ma, mb) = (sa / n, sb / n);
            let va = saa / n - ma * ma;
            let vb = sbb / n - mb * mb;
            let cov = sab / n - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    Ok(total / count as f64)
}

/// Masking rule for [`cf_psnr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskPolicy {
    /// Use every pixel; out-of-image warp samples clamp to the border.
    None,
    /// Exclude pixels whose backward source falls off-image.
    #[default]
    Coverage,
}

/// One frame pair of a cross-frame PSNR report.
#[derive(Debug, Clone)]
pub struct PairMetric {
    pub pair: usize,
    pub value_db: f64,
    /// Fraction of pixels that entered the comparison.
    pub coverage_fraction: f64,
    pub saturated: bool,
}

#[derive(Debug, Clone)]
pub struct MetricReport {
    pub pairs: Vec<PairMetric>,
    pub mean_db: f64,
}

/// Cross-frame PSNR: warps frame `k` along `flows[k]` and scores it
/// against frame `k+1`. With [`MaskPolicy::Coverage`] only pixels whose
/// warp source lies in-image are compared.
pub fn cf_psnr(
    frames: &[Frame],
    flows: &[FlowField],
    policy: MaskPolicy,
    peak: f64,
) -> Result<MetricReport, MetricError> {
    if frames.len() < 2 || flows.len() != frames.len() - 1 {
        return Err(MetricError::FlowCount {
            expected: frames.len().saturating_sub(1),
            frames: frames.len(),
            got: flows.len(),
        });
    }
    if !(peak.is_finite() && peak > 0.0) {
        return Err(MetricError::BadPeak(peak));
    }
    let mut pairs = Vec::with_capacity(flows.len());
    for (k, flow) in flows.iter().enumerate() {
        check_pair(&frames[k], &frames[k + 1])?;
        let warped = warp_frame(&frames[k], flow, WarpMode::BackwardBilinear)?;
        let target = &frames[k + 1];
        let (w, h) = (target.width(), target.height());
        let (mut se, mut used) = (0.0f64, 0usize);
        for y in 0..h {
            for x in 0..w {
                if policy == MaskPolicy::Coverage {
                    let (u, v) = flow.at(x, y);
                    let (sx, sy) = (x as f32 - u, y as f32 - v);
                    if sx < 0.0 || sy < 0.0 || sx > (w - 1) as f32 || sy > (h - 1) as f32 {
                        continue;
                    }
                }
                let d = warped.at(x, y) as f64 - target.at(x, y) as f64;
                se += d * d;
                used += 1;
            }
        }
        if used == 0 {
            return Err(MetricError::DimensionMismatch(format!(
                "pair {k}: coverage mask excluded every pixel"
            )));
        }
        let mse = se / used as f64;
        let value_db = psnr_from_mse(mse, peak);
        pairs.push(PairMetric {
            pair: k,
            value_db,
            coverage_fraction: used as f64 / (w * h) as f64,
            saturated: mse == 0.0,
        });
    }
    let mean_db = pairs.iter().map(|p| p.value_db).sum::<f64>() / pairs.len() as f64;
    Ok(MetricReport { pairs, mean_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use eqvt_flow::{make_synthetic_flow, FlowKind};

    #[test]
    fn identical_frames_saturate() {
        let a = Frame::from_fn(4, 4, |x, y| (x + y) as f32);
        assert_eq!(psnr(&a, &a, 1.0).unwrap(), PSNR_CAP_DB);
    }

    #[test]
    fn full_scale_difference_is_zero_db() {
        let a = Frame::from_fn(4, 4, |_, _| 0.0);
        let b = Frame::from_fn(4, 4, |_, _| 1.0);
        assert!((psnr(&a, &b, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_mse_gives_twenty_db() {
        // Four pixels with squared errors 0.01 each: MSE 0.01, peak 1.
        let a = Frame::new(2, 2, vec![0.0, 0.5, 1.0, 0.25]).unwrap();
        let b = Frame::new(2, 2, vec![0.1, 0.6, 0.9, 0.35]).unwrap();
        let got = psnr(&a, &b, 1.0).unwrap();
        assert!((got - 20.0).abs() < 1e-6, "{got}");
    }

    #[test]
    fn psnr_is_symmetric_and_validates() {
        let a = Frame::from_fn(3, 3, |x, y| (x * y) as f32 * 0.1);
        let b = Frame::from_fn(3, 3, |x, y| (x + y) as f32 * 0.2);
        assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
        assert!(psnr(&a, &Frame::zeros(4, 3), 1.0).is_err());
        assert!(psnr(&a, &b, 0.0).is_err());
    }

    #[test]
    fn ssim_of_identical_frames_is_one() {
        let a = Frame::from_fn(12, 12, |x, y| ((x * 31 + y * 17) % 7) as f32);
        let s = ssim(&a, &a, 5, 0.01, 0.03, 6.0).unwrap();
        assert!((s - 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn ssim_matches_per_window_oracle() {
        let a = Frame::from_fn(9, 8, |x, y| ((x * 13 + y * 29) % 11) as f32 * 0.1);
        let b = Frame::from_fn(9, 8, |x, y| ((x * 7 + y * 3) % 5) as f32 * 0.2);
        let (win, k1, k2, peak) = (3usize, 0.01, 0.03, 1.1);
        let got = ssim(&a, &b, win, k1, k2, peak).unwrap();

        // Brute-force oracle: recompute every window directly.
        let (c1, c2) = ((k1 * peak) * (k1 * peak), (k2 * peak) * (k2 * peak));
        let mut acc = Vec::new();
        for wy in 0..=8 - win {
            for wx in 0..=9 - win {
                let mut pa = Vec::new();
                let mut pb = Vec::new();
                for y in wy..wy + win {
                    for x in wx..wx + win {
                        pa.push(a.at(x, y) as f64);
                        pb.push(b.at(x, y) as f64);
                    }
                }
                let n = pa.len() as f64;
                let ma = pa.iter().sum::<f64>() / n;
                let mb = pb.iter().sum::<f64>() / n;
                let va = pa.iter().map(|v| (v - ma) * (v - ma)).sum::<f64>() / n;
                let vb = pb.iter().map(|v| (v - mb) * (v - mb)).sum::<f64>() / n;
                let cov =
                    pa.iter().zip(&pb).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / n;
                acc.push(
                    ((2.0 * ma * mb + c1) * (2.0 * cov + c2))
                        / ((ma * ma + mb * mb + c1) * (va + vb + c2)),
                );
            }
        }
        let expect = acc.iter().sum::<f64>() / acc.len() as f64;
        assert!((got - expect).abs() < 1e-10, "{got} vs {expect}");
    }

    #[test]
    fn ssim_of_negated_zero_mean_data_approaches_minus_one() {
        // Full-period sinusoid: every 5-wide window sums to zero, so the
        // luminance term stays near 1 and the negated structure drives
        // SSIM to -1.
        let a = Frame::from_fn(15, 15, |x, _| {
            (2.0 * std::f32::consts::PI * x as f32 / 5.0).sin()
        });
        let mut b = a.clone();
        for v in b.data_mut() {
            *v = -*v;
        }
        let s = ssim(&a, &b, 5, 0.01, 0.03, 2.0).unwrap();
        assert!(s < -0.95, "{s}");
    }

    #[test]
    fn ssim_rejects_bad_windows() {
        let a = Frame::zeros(8, 8);
        assert!(ssim(&a, &a, 4, 0.01, 0.03, 1.0).is_err());
        assert!(ssim(&a, &a, 9, 0.01, 0.03, 1.0).is_err());
        assert!(ssim(&a, &a, 1, 0.01, 0.03, 1.0).is_err());
    }

    fn warped_video(n: usize, flow: &FlowField) -> Vec<Frame> {
        let mut frames =
            vec![Frame::from_fn(flow.width(), flow.height(), |x, y| ((x * 31 + y * 7) % 13) as f32)];
        for _ in 1..n {
            frames
                .push(warp_frame(frames.last().unwrap(), flow, WarpMode::BackwardBilinear).unwrap());
        }
        frames
    }

    #[test]
    fn exactly_warped_video_saturates_every_pair() {
        let flow = make_synthetic_flow(FlowKind::Translate { dx: 1.0, dy: 0.0 }, 8, 8).unwrap();
        let frames = warped_video(4, &flow);
        let report = cf_psnr(&frames, &vec![flow; 3], MaskPolicy::Coverage, 1.0).unwrap();
        for p in &report.pairs {
            assert!(p.saturated, "pair {} at {} dB", p.pair, p.value_db);
            assert_eq!(p.value_db, PSNR_CAP_DB);
        }
    }

    #[test]
    fn zero_flow_degenerates_to_consecutive_psnr() {
        let frames: Vec<Frame> = (0..3)
            .map(|k| Frame::from_fn(6, 6, |x, y| ((x + 2 * y + k) % 5) as f32 * 0.3))
            .collect();
        let flows = vec![FlowField::zeros(6, 6); 2];
        let report = cf_psnr(&frames, &flows, MaskPolicy::Coverage, 1.0).unwrap();
        for (k, p) in report.pairs.iter().enumerate() {
            let direct = psnr(&frames[k], &frames[k + 1], 1.0).unwrap();
            assert!((p.value_db - direct).abs() < 1e-12);
            assert_eq!(p.coverage_fraction, 1.0);
        }
    }

    #[test]
    fn cf_psnr_invariant_under_constant_shift() {
        let flow = make_synthetic_flow(FlowKind::Rotate { angle: 0.1 }, 10, 10).unwrap();
        let frames = warped_video(3, &flow);
        let shifted: Vec<Frame> = frames
            .iter()
            .map(|f| {
                let mut g = f.clone();
                for v in g.data_mut() {
                    *v += 7.5;
                }
                g
            })
            .collect();
        let flows = vec![flow; 2];
        let a = cf_psnr(&frames, &flows, MaskPolicy::Coverage, 1.0).unwrap();
        let b = cf_psnr(&shifted, &flows, MaskPolicy::Coverage, 1.0).unwrap();
        for (pa, pb) in a.pairs.iter().zip(&b.pairs) {
            assert!((pa.value_db - pb.value_db).abs() < 1e-6);
        }
    }

    #[test]
    fn independent_gaussian_frames_match_closed_form() {
        // MSE between two independent unit-Gaussian images is 2 in
        // expectation, so cf-PSNR approaches 10 log10(peak²/2).
        let vol = eqvt_noise::independent_volume(64, 64, 9, 123).unwrap();
        let flows = vec![FlowField::zeros(64, 64); 8];
        let report = cf_psnr(vol.frames(), &flows, MaskPolicy::Coverage, 1.0).unwrap();
        let expect = 10.0 * (1.0f64 / 2.0).log10();
        assert!(
            (report.mean_db - expect).abs() < 0.2,
            "{} vs {expect}",
            report.mean_db
        );
    }

    #[test]
    fn flow_count_mismatch_rejected() {
        let frames = vec![Frame::zeros(4, 4); 3];
        let flows = vec![FlowField::zeros(4, 4); 1];
        assert!(matches!(
            cf_psnr(&frames, &flows, MaskPolicy::None, 1.0),
            Err(MetricError::FlowCount { .. })
        ));
    }
}

/// Crate version, recorded in experiment run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
