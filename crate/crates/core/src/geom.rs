//! Core geometric types and the two parametric building blocks of a local
//! surface patch: the bicubic height function and the 6D rotation decoding.
//!
//! A [`LocalPatch`] maps a parameter offset `(du, dv)` (expressed in units of
//! the patch scale) to a world point:
//!
//! ```text
//! origin + R * scale * (du, dv, phi(du, dv))
//! ```
//!
//! where `phi` is the bicubic height field and `R` the local frame.

use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degeneracy floor for the Gram-Schmidt intermediate norms.
pub const GRAM_SCHMIDT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ZERO: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    #[inline]
    pub fn from_array(a: [f64; 3]) -> Self {
        Point3::new(a[0], a[1], a[2])
    }

    #[inline]
    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    #[inline]
    pub fn dot(self, o: Point3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn cross(self, o: Point3) -> Point3 {
        Point3::new(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn dist_sq(self, o: Point3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dz = self.z - o.z;
        dx * dx + dy * dy + dz * dz
    }

    #[inline]
    pub fn dist(self, o: Point3) -> f64 {
        self.dist_sq(o).sqrt()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    #[inline]
    pub fn axis(self, i: usize) -> f64 {
        match i {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn min(self, o: Point3) -> Point3 {
        Point3::new(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Point3) -> Point3 {
        Point3::new(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }
}

impl Add for Point3 {
    type Output = Point3;
    #[inline]
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Point3 {
    #[inline]
    fn add_assign(&mut self, o: Point3) {
        *self = *self + o;
    }
}

impl Sub for Point3 {
    type Output = Point3;
    #[inline]
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    #[inline]
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    #[inline]
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bbox {
    pub min: Point3,
    pub max: Point3,
}

impl Bbox {
    pub fn of_points(points: &[Point3]) -> Option<Bbox> {
        let first = *points.first()?;
        let (min, max) = points
            .iter()
            .fold((first, first), |(lo, hi), &p| (lo.min(p), hi.max(p)));
        Some(Bbox { min, max })
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Point3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0..3).all(|i| self.min.axis(i) <= p.axis(i) && p.axis(i) <= self.max.axis(i))
    }
}

/// A non-empty, finite point cloud with its exact bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    bbox: Bbox,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        let bbox = Bbox::of_points(&points).ok_or(Error::EmptyCloud)?;
        Ok(PointCloud { points, bbox })
    }

    pub fn from_arrays(points: &[[f64; 3]]) -> Result<Self> {
        PointCloud::new(points.iter().map(|&a| Point3::from_array(a)).collect())
    }

    #[inline]
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for API symmetry with slices.
    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn bbox(&self) -> Bbox {
        self.bbox
    }

    pub fn diagonal(&self) -> f64 {
        self.bbox.diagonal()
    }

    pub fn into_points(self) -> Vec<Point3> {
        self.points
    }

    pub fn to_arrays(&self) -> Vec<[f64; 3]> {
        self.points.iter().map(|p| p.to_array()).collect()
    }

    pub fn centroid(&self) -> Point3 {
        let sum = self
            .points
            .iter()
            .fold(Point3::ZERO, |acc, &p| acc + p);
        sum * (1.0 / self.points.len() as f64)
    }

    /// Centers the cloud on its centroid and scales it so the farthest point
    /// lies on the unit sphere. A single-point cloud maps to the origin.
    pub fn normalized_to_unit_sphere(&self) -> PointCloud {
        let c = self.centroid();
        let r = self
            .points
            .iter()
            .map(|&p| (p - c).norm())
            .fold(0.0, f64::max);
        let s = if r > 0.0 { 1.0 / r } else { 1.0 };
        let points = self.points.iter().map(|&p| (p - c) * s).collect();
        PointCloud::new(points).expect("normalization preserves finiteness")
    }
}

impl Index<usize> for PointCloud {
    type Output = Point3;
    fn index(&self, i: usize) -> &Point3 {
        &self.points[i]
    }
}

/// Two 3-vectors that Gram-Schmidt-orthonormalize into a rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rotation6D {
    pub a1: Point3,
    pub a2: Point3,
}

impl Rotation6D {
    pub fn new(a1: Point3, a2: Point3) -> Self {
        Rotation6D { a1, a2 }
    }

    pub fn from_slice(v: [f64; 6]) -> Self {
        Rotation6D {
            a1: Point3::new(v[0], v[1], v[2]),
            a2: Point3::new(v[3], v[4], v[5]),
        }
    }
}

/// A 3x3 rotation matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationMatrix {
    pub m: [[f64; 3]; 3],
}

impl RotationMatrix {
    pub const IDENTITY: RotationMatrix = RotationMatrix {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub fn from_columns(c0: Point3, c1: Point3, c2: Point3) -> Self {
        RotationMatrix {
            m: [[c0.x, c1.x, c2.x], [c0.y, c1.y, c2.y], [c0.z, c1.z, c2.z]],
        }
    }

    pub fn col(&self, j: usize) -> Point3 {
        Point3::new(self.m[0][j], self.m[1][j], self.m[2][j])
    }

    /// `R * v`, local to world.
    #[inline]
    pub fn apply(&self, v: Point3) -> Point3 {
        let m = &self.m;
        Point3::new(
            m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
            m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
            m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z,
        )
    }

    /// `R^T * v`, world to local.
    #[inline]
    pub fn apply_transpose(&self, v: Point3) -> Point3 {
        Point3::new(self.col(0).dot(v), self.col(1).dot(v), self.col(2).dot(v))
    }

    pub fn mul(&self, o: &RotationMatrix) -> RotationMatrix {
        let mut m = [[0.0; 3]; 3];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, out) in row.iter_mut().enumerate() {
                *out = (0..3).map(|k| self.m[i][k] * o.m[k][j]).sum();
            }
        }
        RotationMatrix { m }
    }

    pub fn determinant(&self) -> f64 {
        self.col(0).dot(self.col(1).cross(self.col(2)))
    }

    /// Frobenius norm of `R^T R - I`.
    pub fn orthonormality_error(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let g = self.col(i).dot(self.col(j)) - if i == j { 1.0 } else { 0.0 };
                acc += g * g;
            }
        }
        acc.sqrt()
    }

    /// Rotation about a unit axis by `angle` radians (Rodrigues).
    pub fn about_axis(axis: Point3, angle: f64) -> RotationMatrix {
        let a = axis * (1.0 / axis.norm());
        let (s, c) = angle.sin_cos();
        let t = 1.0 - c;
        RotationMatrix {
            m: [
                [t * a.x * a.x + c, t * a.x * a.y - s * a.z, t * a.x * a.z + s * a.y],
                [t * a.x * a.y + s * a.z, t * a.y * a.y + c, t * a.y * a.z - s * a.x],
                [t * a.x * a.z - s * a.y, t * a.y * a.z + s * a.x, t * a.z * a.z + c],
            ],
        }
    }
}

/// Decodes the 6D representation into an orthonormal, right-handed frame:
/// `b1 = a1/|a1|`, `b2 = normalize(a2 - (a2.b1) b1)`, `b3 = b1 x b2`.
pub fn decode_rotation(r6: &Rotation6D) -> Result<RotationMatrix> {
    let n1 = r6.a1.norm();
    if !(n1 >= GRAM_SCHMIDT_EPS) {
        return Err(Error::DegenerateInput(format!("|a1| = {:e}", n1)));
    }
    let b1 = r6.a1 * (1.0 / n1);
    let residual = r6.a2 - b1 * r6.a2.dot(b1);
    let n2 = residual.norm();
    if !(n2 >= GRAM_SCHMIDT_EPS) {
        return Err(Error::DegenerateInput(format!(
            "a2 is parallel to a1 (orthogonal residual {:e})",
            n2
        )));
    }
    let b2 = residual * (1.0 / n2);
    let b3 = b1.cross(b2);
    Ok(RotationMatrix::from_columns(b1, b2, b3))
}

/// The 16 bicubic coefficients. Index `j * 4 + i` holds the coefficient of
/// `u^i v^j`, so the order is `1, u, u^2, u^3, v, uv, u^2 v, ..., u^3 v^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BicubicCoeffs(pub [f64; 16]);

impl BicubicCoeffs {
    pub const ZERO: BicubicCoeffs = BicubicCoeffs([0.0; 16]);

    #[inline]
    pub const fn slot(i: usize, j: usize) -> usize {
        j * 4 + i
    }

    /// Coefficient of `u^i v^j`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[Self::slot(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.0[Self::slot(i, j)] = value;
    }

    /// A patch with a single unit monomial `u^i v^j`.
    pub fn monomial(i: usize, j: usize) -> BicubicCoeffs {
        let mut c = BicubicCoeffs::ZERO;
        c.set(i, j, 1.0);
        c
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|a| a.is_finite())
    }
}

/// Monomials `u^i v^j` for `i, j` in `0..4`, in [`BicubicCoeffs`] order.
pub fn bicubic_embed(u: f64, v: f64) -> [f64; 16] {
    let pu = [1.0, u, u * u, u * u * u];
    let pv = [1.0, v, v * v, v * v * v];
    let mut out = [0.0; 16];
    for (j, &vj) in pv.iter().enumerate() {
        for (i, &ui) in pu.iter().enumerate() {
            out[BicubicCoeffs::slot(i, j)] = ui * vj;
        }
    }
    out
}

pub fn bicubic_eval(c: &BicubicCoeffs, u: f64, v: f64) -> f64 {
    c.0.iter()
        .zip(bicubic_embed(u, v).iter())
        .map(|(a, e)| a * e)
        .sum()
}

/// One parent point's surface model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalPatch {
    pub origin: Point3,
    pub rot: RotationMatrix,
    pub coeffs: BicubicCoeffs,
    /// Neighborhood radius; `(u, v, w)` are measured in multiples of it.
    pub scale: f64,
}

impl LocalPatch {
    pub fn new(origin: Point3, rot: RotationMatrix, coeffs: BicubicCoeffs, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::DegenerateInput(format!("patch scale {} must be positive", scale)));
        }
        Ok(LocalPatch {
            origin,
            rot,
            coeffs,
            scale,
        })
    }

    /// World point to scale-normalized local `(u, v, w)`.
    pub fn to_local(&self, p: Point3) -> Point3 {
        self.rot.apply_transpose(p - self.origin) * (1.0 / self.scale)
    }

    /// Signed height of `p` above the patch surface, in scale units.
    pub fn surface_residual(&self, p: Point3) -> f64 {
        let l = self.to_local(p);
        l.z - bicubic_eval(&self.coeffs, l.x, l.y)
    }
}

/// Lifts a parameter offset onto the patch surface and into world space.
pub fn patch_lift(p: &LocalPatch, du: f64, dv: f64) -> Point3 {
    let w = bicubic_eval(&p.coeffs, du, dv);
    let local = Point3::new(du * p.scale, dv * p.scale, w * p.scale);
    p.origin + p.rot.apply(local)
}
