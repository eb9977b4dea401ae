//! Child-point generation on fitted patches and the stacked upsampling
//! pipeline.
//!
//! Every parent is split into `m` children. Each child is a parameter offset
//! `(du, dv)` lifted through the parent's fitted patch, so it lies on that
//! patch by construction.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{patch_lift, PointCloud};
use crate::patch_fit::{fit_patch_with_ridge, FitReport, DEFAULT_K, DEFAULT_LAMBDA, DEFAULT_RIDGE};
use crate::spatial::KnnIndex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OffsetPattern {
    RingGrid,
    Halton,
}

impl std::str::FromStr for OffsetPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ring" | "ring_grid" | "ring-grid" => Ok(OffsetPattern::RingGrid),
            "halton" => Ok(OffsetPattern::Halton),
            other => Err(Error::InvalidConfig(format!("unknown offset pattern '{}'", other))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UpsampleConfig {
    /// Per-stage upscale ratios, applied in order.
    pub ratios: Vec<usize>,
    pub k: usize,
    pub offset_pattern: OffsetPattern,
    /// Maximum child offset, as a fraction of the neighborhood scale.
    pub offset_radius: f64,
    /// Gaussian noise sigma applied to the input, as a fraction of its bbox
    /// diagonal.
    pub noise_level: f64,
    pub rng_seed: u64,
    /// Weight of the displacement loss in the combined loss report.
    pub lambda: f64,
    /// Force `phi(0, 0) = 0` so each patch passes through its parent.
    pub pin_origin: bool,
    /// Ridge weight of the bicubic fit. Raise it to smooth noisy inputs.
    #[serde(default = "default_ridge")]
    pub ridge: f64,
}

fn default_ridge() -> f64 {
    DEFAULT_RIDGE
}

impl Default for UpsampleConfig {
    fn default() -> Self {
        UpsampleConfig {
            ratios: vec![1, 4],
            k: DEFAULT_K,
            offset_pattern: OffsetPattern::RingGrid,
            offset_radius: 0.5,
            noise_level: 0.0,
            rng_seed: 0,
            lambda: DEFAULT_LAMBDA,
            pin_origin: true,
            ridge: DEFAULT_RIDGE,
        }
    }
}

impl UpsampleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ratios.is_empty() {
            return Err(Error::InvalidConfig("at least one ratio is required".into()));
        }
        if self.ratios.iter().any(|&r| r < 1) {
            return Err(Error::InvalidConfig("every ratio must be >= 1".into()));
        }
        if self.k < 1 {
            return Err(Error::InvalidConfig("k must be >= 1".into()));
        }
        if !(self.offset_radius > 0.0 && self.offset_radius <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "offset radius {} must be in (0, 1]",
                self.offset_radius
            )));
        }
        if !(self.noise_level >= 0.0 && self.noise_level.is_finite()) {
            return Err(Error::InvalidConfig(format!("noise level {} must be >= 0", self.noise_level)));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidConfig(format!("ridge {} must be > 0", self.ridge)));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidConfig("lambda must be finite".into()));
        }
        Ok(())
    }

    pub fn total_ratio(&self) -> usize {
        self.ratios.iter().product()
    }
}

/// One stage's output.
#[derive(Debug, Clone)]
pub struct StageOutput {
    pub cloud: PointCloud,
    /// Per parent; `None` where the neighborhood was degenerate and the
    /// parent was duplicated instead.
    pub patches: Vec<Option<FitReport>>,
    pub mean_displacement_loss: f64,
    pub mean_rms_residual: f64,
}

impl StageOutput {
    pub fn degenerate_count(&self) -> usize {
        self.patches.iter().filter(|p| p.is_none()).count()
    }
}

/// Radical inverse of `i` in the given base.
fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while i > 0 {
        r += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    r
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Parameter offsets for the `m` children of one parent.
///
/// The first offset is always `(0, 0)`. `RingGrid` spreads the remaining
/// `m - 1` on concentric rings (ring counts differ by at most one, the extra
/// going to outer rings) starting at 90 degrees. `Halton` draws them from the
/// (2, 3) Halton sequence mapped area-uniformly onto the disk, starting at a
/// position derived from `(parent_index, seed)`.
pub fn child_offsets(m: usize, pattern: OffsetPattern, radius: f64, parent_index: usize, seed: u64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    if m == 0 {
        return out;
    }
    out.push((0.0, 0.0));
    let rest = m - 1;
    if rest == 0 {
        return out;
    }
    match pattern {
        OffsetPattern::RingGrid => {
            let rings = ((rest as f64 / 3.0).sqrt().ceil() as usize).clamp(1, rest);
            let base = rest / rings;
            let extra = rest % rings;
            for ring in 1..=rings {
                let count = base + usize::from(ring > rings - extra);
                let r = radius * ring as f64 / rings as f64;
                let phase = PI / 2.0 + (ring - 1) as f64 * PI / count as f64;
                for s in 0..count {
                    let theta = phase + 2.0 * PI * s as f64 / count as f64;
                    out.push((r * theta.cos(), r * theta.sin()));
                }
            }
        }
        OffsetPattern::Halton => {
            let start = splitmix64(seed ^ splitmix64(parent_index as u64)) >> 40;
            for s in 0..rest as u64 {
                let i = start + s + 1;
                let r = radius * radical_inverse(i, 2).sqrt();
                let theta = 2.0 * PI * radical_inverse(i, 3);
                out.push((r * theta.cos(), r * theta.sin()));
            }
        }
    }
    out
}

/// Splits every parent into `m` children on its fitted patch.
///
/// Parents are processed in parallel; the output is ordered by parent and
/// then by child, identical to a sequential run.
pub fn upsample_stage(cloud: &PointCloud, m: usize, cfg: &UpsampleConfig) -> Result<StageOutput> {
    if m == 0 {
        return Err(Error::InvalidConfig("stage ratio must be >= 1".into()));
    }
    if cfg.k > cloud.len() || cfg.k == 0 {
        return Err(Error::KTooLarge {
            k: cfg.k,
            n: cloud.len(),
        });
    }
    let index = KnnIndex::build(cloud);

    let per_parent: Vec<Result<(Vec<_>, Option<FitReport>)>> = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let parent = cloud[i];
            match fit_patch_with_ridge(cloud, &index, i, cfg.k, cfg.ridge) {
                Ok(mut report) => {
                    if cfg.pin_origin {
                        report.patch.coeffs.0[0] = 0.0;
                    }
                    let children = child_offsets(m, cfg.offset_pattern, cfg.offset_radius, i, cfg.rng_seed)
                        .into_iter()
                        .map(|(du, dv)| patch_lift(&report.patch, du, dv))
                        .collect();
                    Ok((children, Some(report)))
                }
                Err(Error::DegenerateNeighborhood { .. }) => Ok((vec![parent; m], None)),
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut points = Vec::with_capacity(cloud.len() * m);
    let mut patches = Vec::with_capacity(cloud.len());
    for r in per_parent {
        let (children, report) = r?;
        points.extend(children);
        patches.push(report);
    }

    let fitted: Vec<&FitReport> = patches.iter().flatten().collect();
    let (mean_displacement_loss, mean_rms_residual) = if fitted.is_empty() {
        (0.0, 0.0)
    } else {
        let n = fitted.len() as f64;
        (
            fitted.iter().map(|r| r.displacement_loss).sum::<f64>() / n,
            fitted.iter().map(|r| r.rms_residual).sum::<f64>() / n,
        )
    };

    Ok(StageOutput {
        cloud: PointCloud::new(points)?,
        patches,
        mean_displacement_loss,
        mean_rms_residual,
    })
}

/// Applies the configured input noise (if any).
pub fn prepare_input(cloud: &PointCloud, cfg: &UpsampleConfig) -> PointCloud {
    add_noise(cloud, cfg.noise_level, cfg.rng_seed)
}

/// Runs every stage in order and returns each stage's output.
pub fn upsample_stages(cloud: &PointCloud, cfg: &UpsampleConfig) -> Result<Vec<StageOutput>> {
    cfg.validate()?;
    if cfg.k > cloud.len() {
        return Err(Error::KTooLarge {
            k: cfg.k,
            n: cloud.len(),
        });
    }
    let mut current = prepare_input(cloud, cfg);
    let mut stages = Vec::with_capacity(cfg.ratios.len());
    for &m in &cfg.ratios {
        let stage = upsample_stage(&current, m, cfg)?;
        current = stage.cloud.clone();
        stages.push(stage);
    }
    Ok(stages)
}

/// Stacked upsampling; the result has `N * prod(ratios)` points.
pub fn upsample(cloud: &PointCloud, cfg: &UpsampleConfig) -> Result<PointCloud> {
    let stages = upsample_stages(cloud, cfg)?;
    Ok(stages.into_iter().last().expect("at least one stage").cloud)
}

/// Adds i.i.d. Gaussian noise with `sigma = level * bbox diagonal` to every
/// coordinate. Deterministic per seed.
pub fn add_noise(cloud: &PointCloud, level: f64, seed: u64) -> PointCloud {
    if level == 0.0 {
        return cloud.clone();
    }
    let sigma = level * cloud.diagonal();
    let normal = match Normal::new(0.0, sigma) {
        Ok(n) => n,
        Err(_) => return cloud.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points = cloud
        .points()
        .iter()
        .map(|&p| {
            let dx = normal.sample(&mut rng);
            let dy = normal.sample(&mut rng);
            let dz = normal.sample(&mut rng);
            crate::geom::Point3::new(p.x + dx, p.y + dy, p.z + dz)
        })
        .collect();
    PointCloud::new(points).expect("finite noise keeps the cloud finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Point3;

    #[test]
    fn single_child_is_centered() {
        for pattern in [OffsetPattern::RingGrid, OffsetPattern::Halton] {
            assert_eq!(child_offsets(1, pattern, 0.5, 3, 9), vec![(0.0, 0.0)]);
        }
    }

    #[test]
    fn ring_grid_four() {
        let offs = child_offsets(4, OffsetPattern::RingGrid, 0.5, 0, 0);
        assert_eq!(offs[0], (0.0, 0.0));
        let deg = |d: f64| d.to_radians();
        for (o, a) in offs[1..].iter().zip([deg(90.0), deg(210.0), deg(330.0)]) {
            assert!((o.0 - 0.5 * a.cos()).abs() < 1e-15);
            assert!((o.1 - 0.5 * a.sin()).abs() < 1e-15);
        }
    }

    #[test]
    fn offsets_stay_in_disk() {
        for m in 1..40 {
            for pattern in [OffsetPattern::RingGrid, OffsetPattern::Halton] {
                let offs = child_offsets(m, pattern, 0.4, m * 7, 11);
                assert_eq!(offs.len(), m);
                assert!(offs.iter().all(|(u, v)| (u * u + v * v).sqrt() <= 0.4 + 1e-15));
            }
        }
    }

    #[test]
    fn halton_is_deterministic_and_parent_dependent() {
        let a = child_offsets(8, OffsetPattern::Halton, 0.5, 17, 42);
        assert_eq!(a, child_offsets(8, OffsetPattern::Halton, 0.5, 17, 42));
        assert_ne!(a, child_offsets(8, OffsetPattern::Halton, 0.5, 18, 42));
    }

    #[test]
    fn radical_inverse_values() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(UpsampleConfig::default().validate().is_ok());
        let bad = |f: fn(&mut UpsampleConfig)| {
            let mut c = UpsampleConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.ratios = vec![1, 0]));
        assert!(bad(|c| c.ratios.clear()));
        assert!(bad(|c| c.offset_radius = 0.0));
        assert!(bad(|c| c.offset_radius = 1.5));
        assert!(bad(|c| c.noise_level = -0.1));
    }

    #[test]
    fn noise_zero_and_determinism() {
        let c = PointCloud::from_arrays(&[[0., 0., 0.], [1., 1., 1.], [2., 0., 1.]]).unwrap();
        assert_eq!(add_noise(&c, 0.0, 5), c);
        assert_eq!(add_noise(&c, 0.01, 5), add_noise(&c, 0.01, 5));
        assert_ne!(add_noise(&c, 0.01, 5), add_noise(&c, 0.01, 6));
    }

    #[test]
    fn degenerate_parents_are_duplicated() {
        // Collinear cloud: every neighborhood has rank 1.
        let pts: Vec<Point3> = (0..10).map(|i| Point3::new(i as f64, 0.0, 0.0)).collect();
        let c = PointCloud::new(pts).unwrap();
        let cfg = UpsampleConfig {
            k: 4,
            ..Default::default()
        };
        let out = upsample_stage(&c, 3, &cfg).unwrap();
        assert_eq!(out.cloud.len(), 30);
        assert_eq!(out.degenerate_count(), 10);
        assert_eq!(out.cloud[4], c[1]);
    }
}
