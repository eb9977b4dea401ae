use std::path::PathBuf;

use clap::Args;

use super::ensure_parent;
use crate::error::Result;
use crate::geom::PointCloud;
use crate::io::{read_cloud, read_mesh};
use crate::metrics::{
    chamfer_l1, chamfer_l2, default_num_seeds, emd, p2f, uniformity, MetricsReport, TriangleMesh,
};

#[derive(Debug, Clone, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pred: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Ground-truth surface for point-to-surface distances.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Uniformity radius fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.004,0.006,0.008,0.010")]
    pub uniformity_radii: Vec<f64>,
    /// Uniformity seed count (default: max(16, N/8), at most 1000).
    #[arg(long)]
    pub num_seeds: Option<usize>,
    /// JSON report path; the key=value text form goes next to it with a
    /// `.txt` extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Evaluates `pred` the way `eval` does: distance metrics in the input
/// frame, uniformity after normalizing `pred` to the unit sphere. EMD is
/// reported only when the sizes match.
pub fn evaluate_normalized(
    pred: &PointCloud,
    gt: &PointCloud,
    mesh: Option<&TriangleMesh>,
    fractions: &[f64],
    num_seeds: Option<usize>,
) -> Result<MetricsReport> {
    let emd = match emd(pred, gt) {
        Ok(r) => {
            if !r.exact {
                log::info!("EMD by auction, certified relative gap {:.3e}", r.relative_gap);
            }
            Some(r.value)
        }
        Err(crate::error::Error::SizeMismatch { left, right }) => {
            log::warn!("EMD skipped: {} vs {} points", left, right);
            None
        }
        Err(e) => return Err(e),
    };
    let (p2f_mean, p2f_max) = match mesh {
        Some(m) => {
            let s = p2f(pred, m)?;
            (Some(s.mean), Some(s.max))
        }
        None => (None, None),
    };
    let uniformity = if fractions.is_empty() {
        Vec::new()
    } else {
        let unit = pred.normalized_to_unit_sphere();
        let seeds = num_seeds.unwrap_or_else(|| default_num_seeds(unit.len()));
        uniformity(&unit, fractions, seeds)?
    };
    Ok(MetricsReport {
        cd_l2: chamfer_l2(pred, gt)?,
        cd_l1: chamfer_l1(pred, gt)?,
        emd,
        p2f_mean,
        p2f_max,
        uniformity,
    })
}

pub(super) fn run(args: &EvalArgs) -> Result<()> {
    let pred = read_cloud(&args.pred)?;
    let gt = read_cloud(&args.gt)?;
    let mesh = match &args.mesh {
        Some(p) => Some(read_mesh(p)?.mesh),
        None => None,
    };
    if args.uniformity_radii.iter().any(|&r| !(r > 0.0)) {
        return Err(crate::error::Error::InvalidConfig("uniformity radii must be positive".into()));
    }
    let report = evaluate_normalized(&pred, &gt, mesh.as_ref(), &args.uniformity_radii, args.num_seeds)?;
    print!("{}", report.to_text());
    if let Some(path) = &args.report {
        ensure_parent(path)?;
        std::fs::write(path, report.to_json_string())?;
        std::fs::write(path.with_extension("txt"), report.to_text())?;
    }
    Ok(())
}
