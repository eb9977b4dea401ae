//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};
use patchup::metrics::TriangleMesh;
use patchup::{Point3, PointCloud, RotationMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_point<R: Rng>(rng: &mut R, half: f64) -> Point3 {
    Point3::new(
        rng.random_range(-half..half),
        rng.random_range(-half..half),
        rng.random_range(-half..half),
    )
}

pub fn random_cloud<R: Rng>(rng: &mut R, n: usize, half: f64) -> PointCloud {
    PointCloud::new((0..n).map(|_| random_point(rng, half)).collect()).unwrap()
}

pub fn random_unit<R: Rng>(rng: &mut R) -> Point3 {
    loop {
        let p = random_point(rng, 1.0);
        let n = p.norm();
        if n > 1e-3 && n <= 1.0 {
            return p * (1.0 / n);
        }
    }
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> RotationMatrix {
    let axis = random_unit(rng);
    let angle = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    RotationMatrix::about_axis(axis, angle)
}

pub fn rigid(cloud: &PointCloud, r: &RotationMatrix, t: Point3) -> PointCloud {
    PointCloud::new(cloud.points().iter().map(|&p| r.apply(p) + t).collect()).unwrap()
}

/// Indices of the `k` nearest points by a full sort on `(dist_sq, index)`.
pub fn brute_knn(points: &[Point3], q: Point3, k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = points.iter().enumerate().map(|(i, &p)| (p.dist_sq(q), i)).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    all.into_iter().take(k).map(|(_, i)| i).collect()
}

fn brute_nn_dists(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    from.points()
        .iter()
        .map(|&p| to.points().iter().map(|&q| p.dist_sq(q)).fold(f64::INFINITY, f64::min))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn brute_chamfer_l2(p: &PointCloud, q: &PointCloud) -> f64 {
    mean(&brute_nn_dists(p, q)) + mean(&brute_nn_dists(q, p))
}

pub fn brute_chamfer_l1(p: &PointCloud, q: &PointCloud) -> f64 {
    let a: Vec<f64> = brute_nn_dists(p, q).iter().map(|d| d.sqrt()).collect();
    let b: Vec<f64> = brute_nn_dists(q, p).iter().map(|d| d.sqrt()).collect();
    0.5 * (mean(&a) + mean(&b))
}

/// Distance to a triangle by minimizing over its barycentric parameter
/// domain: interior projection when it lands inside, else the closest of
/// the three edge segments.
pub fn triangle_distance(p: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    let n = (b - a).cross(c - a);
    let nn = n.norm_sq();
    let d = (p - a).dot(n) / nn;
    let proj = p - n * d;
    let area = |x: Point3, y: Point3, z: Point3| (y - x).cross(z - x).dot(n);
    let (wa, wb, wc) = (area(proj, b, c) / nn, area(a, proj, c) / nn, area(a, b, proj) / nn);
    if wa >= 0.0 && wb >= 0.0 && wc >= 0.0 {
        return p.dist(proj);
    }
    let seg = |x: Point3, y: Point3| {
        let e = y - x;
        let t = ((p - x).dot(e) / e.norm_sq()).clamp(0.0, 1.0);
        p.dist(x + e * t)
    };
    seg(a, b).min(seg(b, c)).min(seg(c, a))
}

pub fn brute_p2f(cloud: &PointCloud, mesh: &TriangleMesh) -> Vec<f64> {
    cloud
        .points()
        .iter()
        .map(|&p| {
            (0..mesh.faces().len())
                .map(|f| {
                    let [a, b, c] = mesh.triangle(f);
                    triangle_distance(p, a, b, c)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Minimum mean matching distance over all `n!` bijections.
pub fn exhaustive_emd(p: &[Point3], q: &[Point3]) -> f64 {
    let n = p.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let cost = |perm: &[usize]| perm.iter().enumerate().map(|(i, &j)| p[i].dist(q[j])).sum::<f64>();
    let mut best = cost(&perm);
    // Heap's algorithm.
    let mut c = vec![0usize; n];
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            best = best.min(cost(&perm));
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    best / n as f64
}

/// Eigenvalues (ascending) and eigenvectors of the second moment of `offsets`.
pub fn moment_eigen(offsets: &[Point3]) -> (Vec<f64>, Vec<Point3>) {
    let mut m = Matrix3::<f64>::zeros();
    for o in offsets {
        let v = nalgebra::Vector3::new(o.x, o.y, o.z);
        m += v * v.transpose();
    }
    let e = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| e.eigenvalues[a].partial_cmp(&e.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&i| e.eigenvalues[i]).collect();
    let vecs = order
        .iter()
        .map(|&i| {
            let c = e.eigenvectors.column(i);
            Point3::new(c[0], c[1], c[2])
        })
        .collect();
    (vals, vecs)
}

/// Mean squared projection of `offsets` onto `dir`.
pub fn projected_variance(offsets: &[Point3], dir: Point3) -> f64 {
    offsets.iter().map(|o| o.dot(dir).powi(2)).sum::<f64>() / offsets.len() as f64
}

/// Bicubic least squares by SVD, no regularization.
pub fn svd_bicubic(uvw: &[(f64, f64, f64)]) -> [f64; 16] {
    let a = DMatrix::from_fn(uvw.len(), 16, |r, c| {
        let (u, v, _) = uvw[r];
        u.powi((c % 4) as i32) * v.powi((c / 4) as i32)
    });
    let b = DVector::from_iterator(uvw.len(), uvw.iter().map(|t| t.2));
    let x = a.svd(true, true).solve(&b, 1e-14).unwrap();
    let mut out = [0.0; 16];
    out.copy_from_slice(x.as_slice());
    out
}

/// Naive double loop over `a_ij u^i v^j`.
pub fn naive_bicubic(c: &[f64; 16], u: f64, v: f64) -> f64 {
    let mut s = 0.0;
    for j in 0..4 {
        for i in 0..4 {
            s += c[j * 4 + i] * u.powi(i as i32) * v.powi(j as i32);
        }
    }
    s
}
