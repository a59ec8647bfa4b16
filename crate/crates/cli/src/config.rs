//! Experiment configuration: one TOML document per run, unknown keys
//! rejected, scalar keys overridable from the command line. Every run
//! directory receives the resolved config, its content hash and a
//! manifest; timestamps live only in the manifest so result files stay
//! byte-reproducible.

use crate::error::CliError;
use eqvt_diffusion::{CovKind, ModelSpec, SyntheticVideoModel, WarpStepKind};
use eqvt_flow::{decode_flo, make_synthetic_flow, FlowField, FlowKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gen_noise: Option<GenNoiseSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify_gaussianity: Option<VerifySection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivariance: Option<EquivarianceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_sweep: Option<BetaSweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps_sweep: Option<StepsSweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<DistanceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dmd: Option<DmdSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cf_psnr: Option<CfPsnrSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plot: Option<PlotSection>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// 0 uses the rayon default.
    #[serde(default)]
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub width: usize,
    pub height: usize,
    /// Exact warp steps, e.g. `"shift:1,0"` or `"rot90:1"`.
    pub warps: Vec<String>,
    /// `"isotropic"` or `"smooth"`.
    pub cov: String,
    pub sigma0: f64,
    #[serde(default = "default_length_scale")]
    pub length_scale: f64,
    #[serde(default)]
    pub sigma_f: f64,
}

fn default_length_scale() -> f64 {
    2.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub width: usize,
    pub height: usize,
    #[serde(default = "default_subdiv")]
    pub subdiv: usize,
    /// Synthetic flow specs, e.g. `"translate:1,0"`, `"rotate:0.15"`,
    /// `"zoom:1.05"`; ignored when `flow_dir` is set.
    #[serde(default)]
    pub flows: Vec<String>,
    /// Directory of `.flo` files, applied in filename order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flow_dir: Option<PathBuf>,
    #[serde(default = "default_beta")]
    pub beta: f64,
}

fn default_subdiv() -> usize {
    4
}

fn default_beta() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenNoiseSection {
    pub out_file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub n_seeds: usize,
    pub alpha: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivarianceSection {
    pub sigmas: Vec<f64>,
    pub n_probes: usize,
    pub fit_samples: usize,
    pub fit_levels: usize,
    pub t_min: f64,
    pub t_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BetaSweepSection {
    pub betas: Vec<f64>,
    pub n_seeds: usize,
    pub n_steps: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepsSweepSection {
    /// `"warped"`, `"independent"`, or `"mixed:<beta>"`.
    pub modes: Vec<String>,
    pub steps: Vec<usize>,
    pub n_seeds: usize,
    pub sigma_max: f64,
    pub sigma_min: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceSection {
    pub betas: Vec<f64>,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DmdSection {
    pub mode: String,
    pub step_size: f64,
    pub iterations: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub log_every: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CfPsnrSection {
    /// Directory of `.pgm` frames or a single `.eqvt` volume.
    pub frames: PathBuf,
    pub flow_dir: PathBuf,
    #[serde(default = "default_peak")]
    pub peak: f64,
    /// `"coverage"` or `"none"`.
    #[serde(default = "default_mask")]
    pub mask: String,
}

fn default_peak() -> f64 {
    1.0
}

fn default_mask() -> String {
    "coverage".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlotSection {
    pub input: PathBuf,
    pub x: String,
    pub y: Vec<String>,
    #[serde(default)]
    pub title: String,
    pub out_file: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(format!("reading {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::config(format!("parsing config: {e}")))
    }

    pub fn apply_overrides(
        &mut self,
        seed: Option<u64>,
        out_dir: Option<PathBuf>,
        workers: Option<usize>,
    ) {
        if let Some(s) = seed {
            self.run.seed = s;
        }
        if let Some(d) = out_dir {
            self.run.out_dir = d;
        }
        if let Some(w) = workers {
            self.run.workers = w;
        }
    }

    /// Canonical serialized form used for hashing and the config copy.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical().as_bytes());
        format!("{:x}", hasher.finalize())
    }

    pub fn model(&self) -> Result<&ModelSection, CliError> {
        self.model.as_ref().ok_or_else(|| CliError::config("missing [model] section"))
    }

    pub fn noise(&self) -> Result<&NoiseSection, CliError> {
        self.noise.as_ref().ok_or_else(|| CliError::config("missing [noise] section"))
    }
}

impl ModelSection {
    pub fn build(&self, seed: u64) -> Result<SyntheticVideoModel, CliError> {
        let warp_steps = self
            .warps
            .iter()
            .map(|s| parse_warp_step(s))
            .collect::<Result<Vec<_>, _>>()?;
        let cov = match self.cov.as_str() {
            "isotropic" => CovKind::Isotropic { sigma0: self.sigma0 },
            "smooth" => {
                CovKind::SmoothKernel { sigma0: self.sigma0, length_scale: self.length_scale }
            }
            other => return Err(CliError::config(format!("unknown cov kind '{other}'"))),
        };
        eqvt_diffusion::make_synthetic_model(&ModelSpec {
            width: self.width,
            height: self.height,
            cov,
            warp_steps,
            sigma_f: self.sigma_f,
            seed,
        })
        .map_err(CliError::from_numeric)
    }
}

impl NoiseSection {
    pub fn build_flows(&self) -> Result<Vec<FlowField>, CliError> {
        if let Some(dir) = &self.flow_dir {
            return load_flo_dir(dir);
        }
        self.flows
            .iter()
            .map(|s| {
                let kind = parse_flow_kind(s)?;
                make_synthetic_flow(kind, self.width, self.height)
                    .map_err(|e| CliError::config(format!("flow '{s}': {e}")))
            })
            .collect()
    }
}

/// Loads every `.flo` file in a directory, sorted by filename.
pub fn load_flo_dir(dir: &Path) -> Result<Vec<FlowField>, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(format!("reading {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "flo").unwrap_or(false))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::config(format!("no .flo files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let bytes = std::fs::read(p)
                .map_err(|e| CliError::io(format!("reading {}: {e}", p.display())))?;
            decode_flo(&bytes)
                .map_err(|e| CliError::config(format!("decoding {}: {e}", p.display())))
        })
        .collect()
}

pub fn parse_warp_step(spec: &str) -> Result<WarpStepKind, CliError> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("warp spec '{spec}' needs kind:args")))?;
    match kind {
        "shift" => {
            let (dx, dy) = args
                .split_once(',')
                .ok_or_else(|| CliError::config(format!("shift '{args}' needs dx,dy")))?;
            Ok(WarpStepKind::Shift {
                dx: dx.trim().parse().map_err(|_| CliError::config("bad shift dx"))?,
                dy: dy.trim().parse().map_err(|_| CliError::config("bad shift dy"))?,
            })
        }
        "rot90" => Ok(WarpStepKind::Rotate90 {
            turns: args.trim().parse().map_err(|_| CliError::config("bad rot90 turns"))?,
        }),
        other => Err(CliError::config(format!("unknown warp kind '{other}'"))),
    }
}

pub fn parse_flow_kind(spec: &str) -> Result<FlowKind, CliError> {
    let (kind, args) = spec
        .split_once(':')
        .ok_or_else(|| CliError::config(format!("flow spec '{spec}' needs kind:args")))?;
    let parse = |s: &str| -> Result<f64, CliError> {
        s.trim().parse().map_err(|_| CliError::config(format!("bad number '{s}' in '{spec}'")))
    };
    match kind {
        "translate" | "shift" => {
            let (dx, dy) = args
                .split_once(',')
                .ok_or_else(|| CliError::config(format!("translate '{args}' needs dx,dy")))?;
            Ok(FlowKind::Translate { dx: parse(dx)?, dy: parse(dy)? })
        }
        "rotate" | "rot" => Ok(FlowKind::Rotate { angle: parse(args)? }),
        "zoom" => Ok(FlowKind::Zoom { scale: parse(args)? }),
        other => Err(CliError::config(format!("unknown flow kind '{other}'"))),
    }
}

pub fn parse_noise_mode(spec: &str) -> Result<eqvt_diffusion::NoiseMode, CliError> {
    use eqvt_diffusion::NoiseMode;
    match spec {
        "warped" => Ok(NoiseMode::Warped),
        "independent" => Ok(NoiseMode::Independent),
        other => {
            if let Some(beta) = other.strip_prefix("mixed:") {
                let beta: f64 =
                    beta.parse().map_err(|_| CliError::config("bad mixed beta"))?;
                Ok(NoiseMode::Mixed { beta })
            } else {
                Err(CliError::config(format!("unknown noise mode '{other}'")))
            }
        }
    }
}

/// Creates the run directory and writes the resolved config, its hash
/// and the run manifest (the only place a timestamp appears).
pub fn prepare_run_dir(config: &ExperimentConfig, kind: &str) -> Result<PathBuf, CliError> {
    let dir = config.run.out_dir.clone();
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    std::fs::write(dir.join("config.toml"), config.canonical())
        .map_err(|e| CliError::io(e.to_string()))?;
    let manifest = serde_json::json!({
        "kind": kind,
        "config_hash": config.content_hash(),
        "unix_time": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        "versions": {
            "eqvt-cli": env!("CARGO_PKG_VERSION"),
            "eqvt-flow": eqvt_flow::VERSION,
            "eqvt-noise": eqvt_noise::VERSION,
            "eqvt-metrics": eqvt_metrics::VERSION,
            "eqvt-diffusion": eqvt_diffusion::VERSION,
        },
    });
    std::fs::write(dir.join("run.json"), serde_json::to_string_pretty(&manifest).unwrap())
        .map_err(|e| CliError::io(e.to_string()))?;
    Ok(dir)
}
