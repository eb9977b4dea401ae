//! Point-cloud upsampling on fitted local surface patches.
//!
//! Each input (parent) point gets a local frame chosen by PCA over its k
//! nearest neighbors and a bicubic height field fitted by least squares in
//! that frame. Child points are parameter offsets lifted onto the patch, so
//! every generated point lies exactly on its parent's surface model. Stages
//! can be stacked (e.g. ratios `[1, 4]`).
//!
//! The crate also ships the evaluation suite (Chamfer, EMD, point-to-surface,
//! uniformity), point cloud and mesh I/O, synthetic analytic shapes, and the
//! `patchup` command-line driver.

// `!(x > 0.0)` is used on purpose so NaN lands in the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod error;
pub mod geom;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod patch_fit;
pub mod shapes;
pub mod spatial;
pub mod upsampler;

pub use error::{Error, Location, Result};
pub use geom::{
    bicubic_embed, bicubic_eval, decode_rotation, patch_lift, Bbox, BicubicCoeffs, LocalPatch, Point3, PointCloud,
    Rotation6D, RotationMatrix,
};
pub use metrics::{evaluate, EvalOptions, MetricsReport, TriangleMesh};
pub use patch_fit::{fit_bicubic, fit_patch, pca_frame, FitReport, Neighborhood};
pub use spatial::{farthest_point_sample, KnnIndex, Neighbor};
pub use upsampler::{add_noise, child_offsets, upsample, upsample_stage, OffsetPattern, StageOutput, UpsampleConfig};
