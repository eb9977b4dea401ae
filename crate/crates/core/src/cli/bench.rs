use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;

use super::eval::evaluate_normalized;
use super::upsample::{config_from, run_pipeline, RunManifest};
use super::{PatchArgs, TOOL_VERSION};
use crate::error::{Error, Result};
use crate::geom::PointCloud;
use crate::io::{fmt_sig9, write_cloud, write_mesh, CloudFormat};
use crate::metrics::{MetricsReport, TriangleMesh};
use crate::shapes::Shape;
use crate::upsampler::UpsampleConfig;

pub const SUMMARY_COLUMNS: [&str; 9] = [
    "shape", "n", "ratio", "noise", "cd_l2", "cd_l1", "emd", "p2f_mean", "p2f_max",
];

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Shapes to run: plane, sphere, cylinder, saddle, torus.
    #[arg(long, value_delimiter = ',', default_value = "plane,sphere,cylinder,saddle,torus")]
    pub shapes: Vec<Shape>,
    /// Input points per shape.
    #[arg(long, default_value_t = 512)]
    pub n: usize,
    /// Upsampling stages applied to every cell.
    #[arg(long, value_delimiter = ',', default_value = "1,4")]
    pub ratio: Vec<usize>,
    /// Noise levels to sweep.
    #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.015")]
    pub noise: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth mesh segments per unit parameter length.
    #[arg(long, default_value_t = 32)]
    pub mesh_resolution: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.004,0.006,0.008,0.010")]
    pub uniformity_radii: Vec<f64>,
    /// Write zero stage timings so manifests are byte-reproducible.
    #[arg(long)]
    pub no_timings: bool,
    #[command(flatten)]
    pub patch: PatchArgs,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub shape: Shape,
    pub n: usize,
    pub ratio: usize,
    pub noise: f64,
    pub report: MetricsReport,
}

impl BenchRow {
    pub fn tsv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(fmt_sig9).unwrap_or_else(|| "NA".into());
        let mut line = format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.shape.name(),
            self.n,
            self.ratio,
            self.noise,
            fmt_sig9(self.report.cd_l2),
            fmt_sig9(self.report.cd_l1),
            opt(self.report.emd),
            opt(self.report.p2f_mean),
            opt(self.report.p2f_max),
        );
        for &(_, u) in &self.report.uniformity {
            let _ = write!(line, "\t{}", fmt_sig9(u));
        }
        line
    }
}

pub fn summary_header(fractions: &[f64]) -> String {
    let mut h = SUMMARY_COLUMNS.join("\t");
    for p in fractions {
        let _ = write!(h, "\tuniformity_{}", p);
    }
    h
}

/// One benchmark cell with its generated data.
#[derive(Debug, Clone)]
pub struct BenchCell {
    pub row: BenchRow,
    pub input: PointCloud,
    pub gt: PointCloud,
    pub mesh: TriangleMesh,
    pub pred: PointCloud,
    pub manifest: RunManifest,
}

/// Samples a clean input of `n` points and a dense ground truth of the
/// output size, upsamples the input with `cfg` (noise included), and
/// evaluates the result against the clean ground truth and mesh.
pub fn bench_cell(
    shape: Shape,
    n: usize,
    cfg: &UpsampleConfig,
    mesh_resolution: usize,
    fractions: &[f64],
) -> Result<BenchCell> {
    cfg.validate()?;
    let input = shape.sample(n, cfg.rng_seed)?;
    let gt = shape.sample(n * cfg.total_ratio(), cfg.rng_seed.wrapping_add(1))?;
    let mesh = shape.mesh(mesh_resolution)?;
    let (pred, stages) = run_pipeline(&input, cfg)?;
    let report = evaluate_normalized(&pred, &gt, Some(&mesh), fractions, None)?;
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        input: "input.ply".into(),
        output: "pred.ply".into(),
        input_points: input.len(),
        output_points: pred.len(),
        stages,
    };
    Ok(BenchCell {
        row: BenchRow {
            shape,
            n,
            ratio: cfg.total_ratio(),
            noise: cfg.noise_level,
            report,
        },
        input,
        gt,
        mesh,
        pred,
        manifest,
    })
}

fn write_cell(dir: &Path, cell: &BenchCell, no_timings: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_cloud(&cell.input, dir.join("input.ply"), CloudFormat::PlyBinaryLe)?;
    write_cloud(&cell.gt, dir.join("gt.ply"), CloudFormat::PlyBinaryLe)?;
    write_cloud(&cell.pred, dir.join("pred.ply"), CloudFormat::PlyBinaryLe)?;
    write_mesh(&cell.mesh, dir.join("mesh.off"))?;
    std::fs::write(dir.join("report.json"), cell.row.report.to_json_string())?;
    std::fs::write(dir.join("report.txt"), cell.row.report.to_text())?;
    let mut manifest = cell.manifest.clone();
    if no_timings {
        for s in &mut manifest.stages {
            s.wall_time_ms = 0.0;
        }
    }
    std::fs::write(dir.join("manifest.json"), manifest.to_json_string())?;
    Ok(())
}

pub(super) fn run(args: &BenchArgs) -> Result<()> {
    if args.shapes.is_empty() || args.noise.is_empty() {
        return Err(Error::InvalidConfig("bench needs at least one shape and noise level".into()));
    }
    if args.uniformity_radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidConfig("uniformity radii must be positive".into()));
    }
    let cells: Vec<(Shape, f64)> = args
        .shapes
        .iter()
        .flat_map(|&s| args.noise.iter().map(move |&nz| (s, nz)))
        .collect();
    for &(_, nz) in &cells {
        config_from(&args.patch, args.ratio.clone(), nz).validate()?;
    }
    std::fs::create_dir_all(&args.out)?;

    let rows: Vec<BenchRow> = cells
        .par_iter()
        .map(|&(shape, noise)| {
            let cfg = config_from(&args.patch, args.ratio.clone(), noise);
            let cell = bench_cell(shape, args.n, &cfg, args.mesh_resolution, &args.uniformity_radii)?;
            let dir = args.out.join(format!("{}_noise{}", shape.name(), noise));
            write_cell(&dir, &cell, args.no_timings)?;
            Ok(cell.row)
        })
        .collect::<Result<_>>()?;

    let mut summary = summary_header(&args.uniformity_radii);
    summary.push('\n');
    for r in &rows {
        summary.push_str(&r.tsv_line());
        summary.push('\n');
    }
    std::fs::write(args.out.join("summary.tsv"), &summary)?;
    print!("{}", summary);
    Ok(())
}
