//! Local surface estimation around a parent point.
//!
//! The projection plane is the one that minimizes the second moment of the
//! out-of-plane displacement `w` over the neighborhood, i.e. the plane spanned
//! by the two leading eigenvectors of the neighborhood covariance taken about
//! the parent. The height field over that plane is a bicubic polynomial fitted
//! by ridge-regularized least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{bicubic_embed, bicubic_eval, BicubicCoeffs, LocalPatch, Point3, PointCloud, RotationMatrix};
use crate::linalg::{cholesky, cholesky_solve, symmetric_eigen3};
use crate::spatial::KnnIndex;

pub const DEFAULT_K: usize = 16;
pub const DEFAULT_RIDGE: f64 = 1e-8;
pub const DEFAULT_LAMBDA: f64 = 0.01;

/// Eigenvalues at or below this fraction of the largest count as zero when
/// computing the covariance rank.
const RANK_TOLERANCE: f64 = 1e-12;

/// Proximal refinement steps applied after the initial ridge solve.
const REFINEMENT_STEPS: usize = 30;

/// Neighbors of one parent, stored as offsets from the parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Neighborhood {
    pub center: Point3,
    pub offsets: Vec<Point3>,
    pub scale: f64,
}

impl Neighborhood {
    /// Scale is the largest offset norm (the distance to the k-th neighbor
    /// when the offsets come from a k-NN query).
    pub fn new(center: Point3, offsets: Vec<Point3>) -> Result<Self> {
        let scale = offsets.iter().map(|o| o.norm()).fold(0.0, f64::max);
        if offsets.is_empty() || !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::DegenerateNeighborhood { rank: 0 });
        }
        Ok(Neighborhood {
            center,
            offsets,
            scale,
        })
    }

    pub fn from_points(center: Point3, points: &[Point3]) -> Result<Self> {
        Self::new(center, points.iter().map(|&p| p - center).collect())
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Offsets expressed in `frame` and divided by the scale.
    pub fn local_coords(&self, frame: &RotationMatrix) -> Vec<Point3> {
        let inv = 1.0 / self.scale;
        self.offsets
            .iter()
            .map(|&o| frame.apply_transpose(o) * inv)
            .collect()
    }

    /// Second-moment matrix of the scale-normalized offsets.
    pub fn second_moment(&self) -> [[f64; 3]; 3] {
        let inv = 1.0 / self.scale;
        let mut m = [[0.0; 3]; 3];
        for &o in &self.offsets {
            let a = (o * inv).to_array();
            for i in 0..3 {
                for j in 0..3 {
                    m[i][j] += a[i] * a[j];
                }
            }
        }
        let n = self.offsets.len() as f64;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        m
    }
}

/// Result of fitting one parent's patch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub patch: LocalPatch,
    /// RMS of `w - phi(u, v)` over the neighbors, in scale units.
    pub rms_residual: f64,
    /// Mean of `w^2` over the neighbors in the chosen frame, before fitting.
    pub displacement_loss: f64,
}

/// Output of [`fit_bicubic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BicubicFit {
    pub coeffs: BicubicCoeffs,
    pub rms_residual: f64,
}

/// Chooses the local frame whose third axis minimizes the mean squared
/// projection of the neighborhood offsets.
///
/// Columns are eigenvectors of the second-moment matrix ordered by descending
/// eigenvalue. The third column is oriented toward +z (then +y, then +x when
/// it lies in the corresponding coordinate plane), and the first column is
/// flipped if needed to keep the frame right-handed.
pub fn pca_frame(nbh: &Neighborhood) -> Result<RotationMatrix> {
    let (values, vecs) = symmetric_eigen3(nbh.second_moment());
    let floor = RANK_TOLERANCE * values[0].abs();
    let rank = values.iter().filter(|&&l| l > floor && l > 0.0).count();
    if rank < 2 {
        return Err(Error::DegenerateNeighborhood { rank });
    }

    let col = |j: usize| Point3::new(vecs[0][j], vecs[1][j], vecs[2][j]);
    let mut e1 = col(0);
    let e2 = col(1);
    let mut normal = col(2);

    let flip = [normal.z, normal.y, normal.x]
        .into_iter()
        .find(|c| c.abs() > 1e-12)
        .is_some_and(|c| c < 0.0);
    if flip {
        normal = -normal;
    }
    if e1.cross(e2).dot(normal) < 0.0 {
        e1 = -e1;
    }
    Ok(RotationMatrix::from_columns(e1, e2, normal))
}

/// Fits bicubic coefficients to the neighborhood expressed in `frame`.
///
/// Solves the ridge problem `min |A a - w|^2 + ridge |a|^2` and then applies
/// proximal refinement steps `min |A a - w|^2 + ridge |a - a_prev|^2`. The
/// ridge term keeps every solve positive definite; the refinement removes its
/// bias so well-posed fits reach the plain least-squares optimum and
/// under-determined ones (fewer than 16 neighbors) the minimum-norm
/// interpolant.
pub fn fit_bicubic(nbh: &Neighborhood, frame: &RotationMatrix, ridge: f64) -> BicubicFit {
    let local = nbh.local_coords(frame);
    let rows: Vec<[f64; 16]> = local.iter().map(|p| bicubic_embed(p.x, p.y)).collect();

    let mut normal = [[0.0; 16]; 16];
    let mut rhs = [0.0; 16];
    for (row, p) in rows.iter().zip(local.iter()) {
        for i in 0..16 {
            rhs[i] += row[i] * p.z;
            for j in 0..=i {
                normal[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..16 {
        for j in 0..i {
            normal[j][i] = normal[i][j];
        }
        normal[i][i] += ridge;
    }

    let coeffs = match cholesky(&normal) {
        Some(l) => {
            let mut a = cholesky_solve(&l, &rhs);
            for _ in 0..REFINEMENT_STEPS {
                let mut b = rhs;
                for (bi, ai) in b.iter_mut().zip(a.iter()) {
                    *bi += ridge * ai;
                }
                a = cholesky_solve(&l, &b);
            }
            BicubicCoeffs(a)
        }
        // Only reachable with ridge <= 0 on a rank-deficient system.
        None => BicubicCoeffs::ZERO,
    };

    let sse: f64 = local
        .iter()
        .map(|p| {
            let r = p.z - bicubic_eval(&coeffs, p.x, p.y);
            r * r
        })
        .sum();
    BicubicFit {
        coeffs,
        rms_residual: (sse / local.len() as f64).sqrt(),
    }
}

/// Fits the patch of `cloud[point_index]` from its `k` nearest neighbors
/// (the parent itself included).
pub fn fit_patch(cloud: &PointCloud, index: &KnnIndex, point_index: usize, k: usize) -> Result<FitReport> {
    fit_patch_with_ridge(cloud, index, point_index, k, DEFAULT_RIDGE)
}

pub fn fit_patch_with_ridge(
    cloud: &PointCloud,
    index: &KnnIndex,
    point_index: usize,
    k: usize,
    ridge: f64,
) -> Result<FitReport> {
    let n = cloud.len();
    if point_index >= n {
        return Err(Error::IndexOutOfRange { index: point_index, n });
    }
    let center = cloud[point_index];
    let hits = index.knn(center, k)?;
    let neighbors: Vec<Point3> = hits.iter().map(|h| index.points()[h.index]).collect();
    let nbh = Neighborhood::from_points(center, &neighbors)?;
    let frame = pca_frame(&nbh)?;

    let displacement_loss = nbh
        .local_coords(&frame)
        .iter()
        .map(|p| p.z * p.z)
        .sum::<f64>()
        / nbh.len() as f64;
    let fit = fit_bicubic(&nbh, &frame, ridge);
    Ok(FitReport {
        patch: LocalPatch::new(center, frame, fit.coeffs, nbh.scale)?,
        rms_residual: fit.rms_residual,
        displacement_loss,
    })
}

/// `L = L_cd + lambda * L_d`.
pub fn combined_loss(chamfer: f64, displacement_loss: f64, lambda: f64) -> f64 {
    chamfer + lambda * displacement_loss
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, half: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let t = |k: usize| -half + 2.0 * half * k as f64 / (n - 1) as f64;
                out.push((t(i), t(j)));
            }
        }
        out
    }

    #[test]
    fn planar_z_frame() {
        let offs: Vec<Point3> = grid(5, 1.0).into_iter().map(|(u, v)| Point3::new(u, 0.5 * v, 0.0)).collect();
        let nbh = Neighborhood::new(Point3::ZERO, offs).unwrap();
        let r = pca_frame(&nbh).unwrap();
        assert_eq!(r.col(2), Point3::new(0.0, 0.0, 1.0));
        assert!((r.determinant() - 1.0).abs() < 1e-12);
        assert!(nbh.local_coords(&r).iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn plane_x_zero_frame() {
        let offs: Vec<Point3> = grid(5, 1.0).into_iter().map(|(u, v)| Point3::new(0.0, u, 0.3 * v)).collect();
        let r = pca_frame(&Neighborhood::new(Point3::ZERO, offs).unwrap()).unwrap();
        assert_eq!(r.col(2), Point3::new(1.0, 0.0, 0.0));
        assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn collinear_is_degenerate() {
        let offs: Vec<Point3> = (0..6).map(|i| Point3::new(i as f64, 2.0 * i as f64, 0.0)).collect();
        let nbh = Neighborhood::new(Point3::ZERO, offs).unwrap();
        assert!(matches!(pca_frame(&nbh), Err(Error::DegenerateNeighborhood { rank: 1 })));
        assert!(matches!(
            Neighborhood::new(Point3::ZERO, vec![Point3::ZERO]),
            Err(Error::DegenerateNeighborhood { rank: 0 })
        ));
    }

    #[test]
    fn planar_fit_is_zero() {
        let offs: Vec<Point3> = grid(4, 0.7).into_iter().map(|(u, v)| Point3::new(u, v, 0.0)).collect();
        let nbh = Neighborhood::new(Point3::ZERO, offs).unwrap();
        let fit = fit_bicubic(&nbh, &RotationMatrix::IDENTITY, DEFAULT_RIDGE);
        assert!(fit.coeffs.0.iter().all(|a| a.abs() < 1e-9));
        assert_eq!(fit.rms_residual, 0.0);
    }

    #[test]
    fn recovers_u_squared() {
        // Points on w = u^2 in scale units; the far corner fixes scale = 1.
        let pts: Vec<(f64, f64)> = grid(5, 0.7);
        let offs: Vec<Point3> = pts.iter().map(|&(u, v)| Point3::new(u, v, u * u)).collect();
        let nbh = Neighborhood::new(Point3::ZERO, offs).unwrap();
        let s = nbh.scale;
        let fit = fit_bicubic(&nbh, &RotationMatrix::IDENTITY, DEFAULT_RIDGE);
        // In normalized coordinates w/s = s (u/s)^2.
        for (k, a) in fit.coeffs.0.iter().enumerate() {
            let expect = if k == BicubicCoeffs::slot(2, 0) { s } else { 0.0 };
            assert!((a - expect).abs() < 1e-6, "coefficient {} = {}", k, a);
        }
        assert!(fit.rms_residual < 1e-9);
    }

    #[test]
    fn three_points_interpolate() {
        let offs = vec![
            Point3::new(1.0, 0.0, 0.2),
            Point3::new(0.0, 1.0, -0.1),
            Point3::new(-0.6, -0.6, 0.3),
        ];
        let nbh = Neighborhood::new(Point3::ZERO, offs).unwrap();
        let fit = fit_bicubic(&nbh, &RotationMatrix::IDENTITY, DEFAULT_RIDGE);
        assert!(fit.rms_residual < 1e-9, "{}", fit.rms_residual);
    }

    #[test]
    fn combined_loss_weights_displacement() {
        assert_eq!(combined_loss(1.0, 2.0, 0.5), 2.0);
    }
}
