use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};

use super::{ensure_parent, PatchArgs, TOOL_VERSION};
use crate::error::Result;
use crate::geom::PointCloud;
use crate::io::{read_cloud, write_cloud, CloudFormat};
use crate::upsampler::{prepare_input, upsample_stage, UpsampleConfig};

#[derive(Debug, Clone, Args)]
pub struct UpsampleArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Output cloud; `.ply` writes binary PLY, `.xyz` text.
    #[arg(long)]
    pub output: PathBuf,
    /// Per-stage upscale ratios.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub ratios: Vec<usize>,
    /// Input noise sigma as a fraction of the bbox diagonal.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Write zero stage timings so the manifest is byte-reproducible.
    #[arg(long)]
    pub no_timings: bool,
    #[command(flatten)]
    pub patch: PatchArgs,
}

impl UpsampleArgs {
    pub fn config(&self) -> UpsampleConfig {
        config_from(&self.patch, self.ratios.clone(), self.noise)
    }
}

pub(crate) fn config_from(p: &PatchArgs, ratios: Vec<usize>, noise: f64) -> UpsampleConfig {
    UpsampleConfig {
        ratios,
        k: p.k,
        offset_pattern: p.pattern,
        offset_radius: p.offset_radius,
        noise_level: noise,
        rng_seed: p.seed,
        lambda: p.lambda,
        pin_origin: !p.no_pin_origin,
        ridge: p.ridge,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub ratio: usize,
    pub input_points: usize,
    pub output_points: usize,
    pub degenerate_parents: usize,
    pub mean_displacement_loss: f64,
    pub mean_rms_residual: f64,
    pub wall_time_ms: f64,
}

/// Everything needed to reproduce an upsampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: UpsampleConfig,
    pub input: String,
    pub output: String,
    pub input_points: usize,
    pub output_points: usize,
    pub stages: Vec<StageRecord>,
}

impl RunManifest {
    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is serializable")
    }
}

/// Runs every stage, recording per-stage statistics and timings.
pub fn run_pipeline(cloud: &PointCloud, cfg: &UpsampleConfig) -> Result<(PointCloud, Vec<StageRecord>)> {
    cfg.validate()?;
    if cfg.k > cloud.len() {
        return Err(crate::error::Error::KTooLarge {
            k: cfg.k,
            n: cloud.len(),
        });
    }
    let mut current = prepare_input(cloud, cfg);
    let mut records = Vec::with_capacity(cfg.ratios.len());
    for &m in &cfg.ratios {
        let t0 = Instant::now();
        let stage = upsample_stage(&current, m, cfg)?;
        records.push(StageRecord {
            ratio: m,
            input_points: current.len(),
            output_points: stage.cloud.len(),
            degenerate_parents: stage.degenerate_count(),
            mean_displacement_loss: stage.mean_displacement_loss,
            mean_rms_residual: stage.mean_rms_residual,
            wall_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        });
        current = stage.cloud;
    }
    Ok((current, records))
}

pub(super) fn run(args: &UpsampleArgs) -> Result<()> {
    let cfg = args.config();
    cfg.validate()?;
    let format = CloudFormat::from_path(&args.output)?;
    ensure_parent(&args.output)?;
    let input = read_cloud(&args.input)?;
    let (output, stages) = run_pipeline(&input, &cfg)?;
    write_cloud(&output, &args.output, format)?;
    log::info!("{} -> {} points", input.len(), output.len());

    if let Some(path) = &args.manifest {
        ensure_parent(path)?;
        let mut manifest = RunManifest {
            tool_version: TOOL_VERSION.to_string(),
            config: cfg,
            input: args.input.display().to_string(),
            output: args.output.display().to_string(),
            input_points: input.len(),
            output_points: output.len(),
            stages,
        };
        if args.no_timings {
            for s in &mut manifest.stages {
                s.wall_time_ms = 0.0;
            }
        }
        std::fs::write(path, manifest.to_json_string())?;
    }
    Ok(())
}
