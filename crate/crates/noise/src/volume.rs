//! The noise volume container and its binary format.
//!
//! Layout: magic `EQVT`, `u16` version, `u8` dtype (0 = little-endian
//! f32), `u8` ndim, `ndim` little-endian `u32` dimensions
//! (frames, height, width), the row-major frame-major payload, then a
//! `u32` length-prefixed UTF-8 JSON metadata block.

use crate::NoiseError;
use eqvt_flow::Frame;
use serde::{Deserialize, Serialize};

pub const EQVT_MAGIC: &[u8; 4] = b"EQVT";
pub const EQVT_VERSION: u16 = 1;
const DTYPE_F32_LE: u8 = 0;

/// Provenance carried with every noise volume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VolumeMeta {
    pub seed: u64,
    pub subdiv: u32,
    pub beta: f64,
    pub lineage: String,
}

/// A stack of per-frame noise images plus provenance metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseVolume {
    frames: Vec<Frame>,
    pub meta: VolumeMeta,
}

impl NoiseVolume {
    pub fn new(frames: Vec<Frame>, meta: VolumeMeta) -> Result<Self, NoiseError> {
        let first = frames.first().ok_or(NoiseError::BadVolume)?;
        let (w, h) = (first.width(), first.height());
        if frames.iter().any(|f| f.width() != w || f.height() != h) {
            return Err(NoiseError::BadVolume);
        }
        Ok(Self { frames, meta })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, k: usize) -> &Frame {
        &self.frames[k]
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }

    /// Serializes to the EQVT container format.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (f, h, w) = (self.frames.len(), self.height(), self.width());
        let mut out = Vec::with_capacity(12 + 12 + f * h * w * 4);
        out.extend_from_slice(EQVT_MAGIC);
        out.extend_from_slice(&EQVT_VERSION.to_le_bytes());
        out.push(DTYPE_F32_LE);
        out.push(3);
        for dim in [f as u32, h as u32, w as u32] {
            out.extend_from_slice(&dim.to_le_bytes());
        }
        for frame in &self.frames {
            for v in frame.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let meta = serde_json::to_vec(&self.meta).expect("metadata serializes");
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(&meta);
        out
    }

    /// Decodes an EQVT container, validating the header and payload size.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, NoiseError> {
        let err = |m: &str| NoiseError::Format(m.to_string());
        if bytes.len() < 8 {
            return Err(err("container shorter than header"));
        }
        if &bytes[0..4] != EQVT_MAGIC {
            return Err(err("bad magic"));
        }
        let version = u16::from_le_bytes(bytes[4..6].try_into().unwrap());
        if version != EQVT_VERSION {
            return Err(NoiseError::Format(format!("unsupported version {version}")));
        }
        if bytes[6] != DTYPE_F32_LE {
            return Err(NoiseError::Format(format!("unsupported dtype {}", bytes[6])));
        }
        let ndim = bytes[7] as usize;
        if ndim != 3 {
            return Err(NoiseError::Format(format!("expected 3 dimensions, got {ndim}")));
        }
        if bytes.len() < 8 + 4 * ndim {
            return Err(err("truncated dimension list"));
        }
        let dim = |i: usize| {
            u32::from_le_bytes(bytes[8 + 4 * i..12 + 4 * i].try_into().unwrap()) as usize
        };
        let (f, h, w) = (dim(0), dim(1), dim(2));
        if f == 0 || h == 0 || w == 0 {
            return Err(err("zero dimension"));
        }
        let payload_off = 8 + 4 * ndim;
        let payload_len = f * h * w * 4;
        if bytes.len() < payload_off + payload_len + 4 {
            return Err(err("truncated payload"));
        }
        let mut frames = Vec::with_capacity(f);
        for k in 0..f {
            let mut data = Vec::with_capacity(h * w);
            for i in 0..h * w {
                let off = payload_off + (k * h * w + i) * 4;
                data.push(f32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()));
            }
            frames.push(Frame::new(w, h, data).map_err(NoiseError::Flow)?);
        }
        let meta_off = payload_off + payload_len;
        let meta_len =
            u32::from_le_bytes(bytes[meta_off..meta_off + 4].try_into().unwrap()) as usize;
        if bytes.len() != meta_off + 4 + meta_len {
            return Err(err("metadata length mismatch"));
        }
        let meta_str = std::str::from_utf8(&bytes[meta_off + 4..])
            .map_err(|_| err("metadata is not UTF-8"))?;
        let meta: VolumeMeta =
            serde_json::from_str(meta_str).map_err(|e| NoiseError::Format(e.to_string()))?;
        NoiseVolume::new(frames, meta)
    }
}
