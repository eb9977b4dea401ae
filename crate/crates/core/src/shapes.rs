//! Analytic test surfaces for the synthetic benchmark: area-uniform samplers,
//! exact surface distances and triangulated ground-truth meshes.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::metrics::TriangleMesh;

const TORUS_MAJOR: f64 = 1.0;
const TORUS_MINOR: f64 = 0.35;
const CYLINDER_RADIUS: f64 = 1.0;
const PLANE_EXTENT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    /// The plane `z = 0`, sampled over `[-1, 1]^2`. Its distance and mesh
    /// cover `[-2, 2]^2` so children placed past the sampled square still lie
    /// on the surface.
    Plane,
    /// The unit sphere.
    Sphere,
    /// Lateral surface of a radius-1 cylinder, `z` in `[-1, 1]`.
    Cylinder,
    /// `z = (x^2 - y^2) / 2` over `[-1, 1]^2`.
    Saddle,
    /// Torus with major radius 1 and minor radius 0.35 around the z axis.
    Torus,
}

impl Shape {
    pub const ALL: [Shape; 5] = [Shape::Plane, Shape::Sphere, Shape::Cylinder, Shape::Saddle, Shape::Torus];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Plane => "plane",
            Shape::Sphere => "sphere",
            Shape::Cylinder => "cylinder",
            Shape::Saddle => "saddle",
            Shape::Torus => "torus",
        }
    }

    fn sample_one(self, rng: &mut ChaCha8Rng) -> Point3 {
        match self {
            Shape::Plane => Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0),
            Shape::Sphere => loop {
                let p = Point3::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                let n = p.norm();
                if n > 1e-9 {
                    break p * (1.0 / n);
                }
            },
            Shape::Cylinder => {
                let t = rng.random_range(0.0..2.0 * PI);
                Point3::new(CYLINDER_RADIUS * t.cos(), CYLINDER_RADIUS * t.sin(), rng.random_range(-1.0..1.0))
            }
            Shape::Saddle => loop {
                // Area element sqrt(1 + x^2 + y^2) is at most sqrt(3).
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                let accept = (1.0 + x * x + y * y).sqrt() / 3f64.sqrt();
                if rng.random::<f64>() < accept {
                    break Point3::new(x, y, 0.5 * (x * x - y * y));
                }
            },
            Shape::Torus => loop {
                let u = rng.random_range(0.0..2.0 * PI);
                let v: f64 = rng.random_range(0.0..2.0 * PI);
                let accept = (TORUS_MAJOR + TORUS_MINOR * v.cos()) / (TORUS_MAJOR + TORUS_MINOR);
                if rng.random::<f64>() < accept {
                    let ring = TORUS_MAJOR + TORUS_MINOR * v.cos();
                    break Point3::new(ring * u.cos(), ring * u.sin(), TORUS_MINOR * v.sin());
                }
            },
        }
    }

    /// `n` area-uniform random samples.
    pub fn sample(self, n: usize, seed: u64) -> Result<PointCloud> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (self as u64).wrapping_mul(0x2545_F491_4F6C_DD1D));
        PointCloud::new((0..n).map(|_| self.sample_one(&mut rng)).collect())
    }

    /// Distance from `p` to the surface. Closed form except for the saddle,
    /// which uses a grid scan refined by pattern search.
    pub fn distance(self, p: Point3) -> f64 {
        match self {
            Shape::Plane => {
                let q = Point3::new(
                    p.x.clamp(-PLANE_EXTENT, PLANE_EXTENT),
                    p.y.clamp(-PLANE_EXTENT, PLANE_EXTENT),
                    0.0,
                );
                p.dist(q)
            }
            Shape::Sphere => (p.norm() - 1.0).abs(),
            Shape::Cylinder => {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                let dz = (p.z.abs() - 1.0).max(0.0);
                ((r - CYLINDER_RADIUS).powi(2) + dz * dz).sqrt()
            }
            Shape::Saddle => saddle_distance(p),
            Shape::Torus => {
                let r = (p.x * p.x + p.y * p.y).sqrt();
                (((r - TORUS_MAJOR).powi(2) + p.z * p.z).sqrt() - TORUS_MINOR).abs()
            }
        }
    }

    /// Triangulated surface at roughly `resolution` segments per unit
    /// parameter length.
    pub fn mesh(self, resolution: usize) -> Result<TriangleMesh> {
        let res = resolution.max(4);
        let (verts, faces) = match self {
            Shape::Plane => grid_mesh(2 * res, 2 * res, false, |s, t| {
                Point3::new(PLANE_EXTENT * (2.0 * s - 1.0), PLANE_EXTENT * (2.0 * t - 1.0), 0.0)
            }),
            Shape::Saddle => grid_mesh(res, res, false, |s, t| {
                let (x, y) = (2.0 * s - 1.0, 2.0 * t - 1.0);
                Point3::new(x, y, 0.5 * (x * x - y * y))
            }),
            Shape::Cylinder => grid_mesh(4 * res, res, true, |s, t| {
                let a = 2.0 * PI * s;
                Point3::new(CYLINDER_RADIUS * a.cos(), CYLINDER_RADIUS * a.sin(), 2.0 * t - 1.0)
            }),
            Shape::Torus => torus_mesh(4 * res, 2 * res),
            Shape::Sphere => sphere_mesh(4 * res, 2 * res),
        };
        TriangleMesh::new_dropping_degenerate(verts, faces).map(|(m, _)| m)
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidConfig(format!("unknown shape '{}'", s)))
    }
}

fn saddle_distance(p: Point3) -> f64 {
    let f = |x: f64, y: f64| Point3::new(x, y, 0.5 * (x * x - y * y));
    let mut best = (0.0, 0.0);
    let mut best_d = f64::INFINITY;
    let steps = 40;
    for i in 0..=steps {
        for j in 0..=steps {
            let x = -1.0 + 2.0 * i as f64 / steps as f64;
            let y = -1.0 + 2.0 * j as f64 / steps as f64;
            let d = p.dist_sq(f(x, y));
            if d < best_d {
                best_d = d;
                best = (x, y);
            }
        }
    }
    let mut h = 2.0 / steps as f64;
    while h > 1e-12 {
        let mut improved = false;
        for (dx, dy) in [(h, 0.0), (-h, 0.0), (0.0, h), (0.0, -h)] {
            let x = (best.0 + dx).clamp(-1.0, 1.0);
            let y = (best.1 + dy).clamp(-1.0, 1.0);
            let d = p.dist_sq(f(x, y));
            if d < best_d {
                best_d = d;
                best = (x, y);
                improved = true;
            }
        }
        if !improved {
            h *= 0.5;
        }
    }
    best_d.sqrt()
}

fn grid_mesh(
    nu: usize,
    nv: usize,
    wrap_u: bool,
    f: impl Fn(f64, f64) -> Point3,
) -> (Vec<Point3>, Vec<[usize; 3]>) {
    let cols = if wrap_u { nu } else { nu + 1 };
    let mut verts = Vec::with_capacity(cols * (nv + 1));
    for j in 0..=nv {
        for i in 0..cols {
            verts.push(f(i as f64 / nu as f64, j as f64 / nv as f64));
        }
    }
    let id = |i: usize, j: usize| j * cols + (i % cols);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, faces)
}

fn torus_mesh(nu: usize, nv: usize) -> (Vec<Point3>, Vec<[usize; 3]>) {
    let mut verts = Vec::with_capacity(nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let u = 2.0 * PI * i as f64 / nu as f64;
            let v = 2.0 * PI * j as f64 / nv as f64;
            let ring = TORUS_MAJOR + TORUS_MINOR * v.cos();
            verts.push(Point3::new(ring * u.cos(), ring * u.sin(), TORUS_MINOR * v.sin()));
        }
    }
    let id = |i: usize, j: usize| (j % nv) * nu + (i % nu);
    let mut faces = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            faces.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, faces)
}

fn sphere_mesh(nu: usize, nv: usize) -> (Vec<Point3>, Vec<[usize; 3]>) {
    // Poles are single vertices; rings in between.
    let mut verts = vec![Point3::new(0.0, 0.0, 1.0)];
    for j in 1..nv {
        let theta = PI * j as f64 / nv as f64;
        for i in 0..nu {
            let phi = 2.0 * PI * i as f64 / nu as f64;
            verts.push(Point3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()));
        }
    }
    verts.push(Point3::new(0.0, 0.0, -1.0));
    let south = verts.len() - 1;
    let ring = |j: usize, i: usize| 1 + (j - 1) * nu + (i % nu);
    let mut faces = Vec::new();
    for i in 0..nu {
        faces.push([0, ring(1, i), ring(1, i + 1)]);
        faces.push([south, ring(nv - 1, i + 1), ring(nv - 1, i)]);
    }
    for j in 1..nv - 1 {
        for i in 0..nu {
            faces.push([ring(j, i), ring(j + 1, i), ring(j + 1, i + 1)]);
            faces.push([ring(j, i), ring(j + 1, i + 1), ring(j, i + 1)]);
        }
    }
    (verts, faces)
}

/// `n` points on the unit sphere by the golden-angle spiral.
pub fn fibonacci_sphere(n: usize) -> Result<PointCloud> {
    let golden = PI * (3.0 - 5f64.sqrt());
    let points = (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            Point3::new(r * a.cos(), r * a.sin(), z)
        })
        .collect();
    PointCloud::new(points)
}

/// Dart-throwing Poisson-disk samples on the unit sphere: exactly `n` points
/// with pairwise chord distance at least `min_dist`, shrinking the radius when
/// the target count is not reached.
pub fn poisson_disk_sphere(n: usize, seed: u64) -> Result<PointCloud> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Random close packing covers about 55% of the sphere area.
    let mut min_dist = (0.55 * 16.0 / n as f64).sqrt();
    loop {
        let mut pts: Vec<Point3> = Vec::with_capacity(n);
        let mut misses = 0usize;
        while pts.len() < n && misses < 30 * n {
            let c = Shape::Sphere.sample_one(&mut rng);
            if pts.iter().all(|&p| p.dist_sq(c) >= min_dist * min_dist) {
                pts.push(c);
                misses = 0;
            } else {
                misses += 1;
            }
        }
        if pts.len() == n {
            return PointCloud::new(pts);
        }
        min_dist *= 0.95;
    }
}
