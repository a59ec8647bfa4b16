//! Variance-preserving blend of warped and independent noise:
//! `out = beta * warped + sqrt(1 - beta^2) * fresh`.

use crate::rng::{CounterRng, CLASS_MIX};
use crate::volume::NoiseVolume;
use crate::NoiseError;
use eqvt_flow::{lineage_pairs, FlowField, Frame};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixParams {
    /// Relative strength of the warped component, in `[0, 1]`.
    pub beta: f64,
    /// Seed for the independent component's counter stream.
    pub seed: u64,
}

/// Blends each pixel with a fresh independent draw. Marginals stay unit
/// Gaussian for any `beta`; `beta = 1` reproduces the input bit-exactly.
pub fn mix_noise(warped: &NoiseVolume, params: &MixParams) -> Result<NoiseVolume, NoiseError> {
    if !(0.0..=1.0).contains(&params.beta) || !params.beta.is_finite() {
        return Err(NoiseError::BadBeta(params.beta));
    }
    let beta = params.beta as f32;
    let indep = (1.0 - params.beta * params.beta).sqrt() as f32;
    let rng = CounterRng::new(params.seed, CLASS_MIX);
    let (w, h) = (warped.width(), warped.height());
    let frames: Vec<Frame> = warped
        .frames()
        .iter()
        .enumerate()
        .map(|(k, frame)| {
            Frame::from_fn(w, h, |x, y| {
                let fresh = rng.standard_normal(k as u64, (y * w + x) as u64, 0) as f32;
                beta * frame.at(x, y) + indep * fresh
            })
        })
        .collect();
    let mut meta = warped.meta.clone();
    meta.beta = params.beta;
    meta.lineage = format!("{}|mix", meta.lineage);
    NoiseVolume::new(frames, meta)
}

/// Pearson correlation between frame `k` at source pixels and frame
/// `k+1` at their transported targets, restricted to pixels whose
/// lineage survives the step intact. One value per consecutive pair.
pub fn temporal_correlation(
    volume: &NoiseVolume,
    flows: &[FlowField],
) -> Result<Vec<f64>, NoiseError> {
    if flows.len() + 1 != volume.n_frames() {
        return Err(NoiseError::FlowCount { flows: flows.len(), frames: volume.n_frames() });
    }
    let subdiv = volume.meta.subdiv.max(1) as usize;
    let mut out = Vec::with_capacity(flows.len());
    for (k, flow) in flows.iter().enumerate() {
        let pairs = lineage_pairs(flow, subdiv);
        if pairs.is_empty() {
            return Err(NoiseError::NoLineage(k, k + 1));
        }
        let src = volume.frame(k).data();
        let dst = volume.frame(k + 1).data();
        out.push(pearson(pairs.iter().map(|&(s, t)| (src[s] as f64, dst[t] as f64))));
    }
    Ok(out)
}

fn pearson(pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (x, y) in pairs {
        n += 1.0;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let cov = sxy / n - sx / n * (sy / n);
    let vx = sxx / n - (sx / n) * (sx / n);
    let vy = syy / n - (sy / n) * (sy / n);
    cov / (vx * vy).sqrt()
}
