//! Point-to-surface distance against a triangle mesh.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::pairwise_sum;
use crate::error::{Error, Result};
use crate::geom::{Bbox, Point3, PointCloud};

/// Meshes with fewer faces are scanned directly.
pub const BVH_MIN_FACES: usize = 200;
const BVH_LEAF_SIZE: usize = 4;

/// Faces whose doubled area falls below this fraction of the squared
/// longest edge are treated as degenerate.
const DEGENERATE_AREA_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    vertices: Vec<Point3>,
    faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, rejecting out-of-range indices and zero-area faces.
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {} references vertex {} of {}",
                    fi,
                    bad,
                    vertices.len()
                )));
            }
            if is_degenerate(&vertices, f) {
                return Err(Error::InvalidMesh(format!("face {} is degenerate", fi)));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    /// Like [`TriangleMesh::new`] but silently drops degenerate faces,
    /// returning how many were removed.
    pub fn new_dropping_degenerate(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<(Self, usize)> {
        let total = faces.len();
        for (fi, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "face {} references vertex {} of {}",
                    fi,
                    bad,
                    vertices.len()
                )));
            }
        }
        let kept: Vec<[usize; 3]> = faces.into_iter().filter(|f| !is_degenerate(&vertices, f)).collect();
        let dropped = total - kept.len();
        Ok((TriangleMesh::new(vertices, kept)?, dropped))
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn triangle(&self, f: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }
}

fn is_degenerate(v: &[Point3], f: &[usize; 3]) -> bool {
    let (a, b, c) = (v[f[0]], v[f[1]], v[f[2]]);
    let cross = (b - a).cross(c - a).norm();
    let longest = (b - a).norm_sq().max((c - a).norm_sq()).max((c - b).norm_sq());
    !(cross > DEGENERATE_AREA_RATIO * longest)
}

/// Closest point on triangle `abc` to `p`, handling the vertex, edge and face
/// Voronoi regions separately.
pub fn closest_point_on_triangle(p: Point3, a: Point3, b: Point3, c: Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }

    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }

    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }

    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }

    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }

    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }

    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

pub fn point_triangle_distance(p: Point3, tri: &[Point3; 3]) -> f64 {
    p.dist(closest_point_on_triangle(p, tri[0], tri[1], tri[2]))
}

#[derive(Debug, Clone)]
enum BvhNode {
    Leaf { bbox: Bbox, start: usize, end: usize },
    Inner { bbox: Bbox, left: usize, right: usize },
}

impl BvhNode {
    fn bbox(&self) -> &Bbox {
        match self {
            BvhNode::Leaf { bbox, .. } | BvhNode::Inner { bbox, .. } => bbox,
        }
    }
}

fn bbox_dist_sq(b: &Bbox, p: Point3) -> f64 {
    let mut d = 0.0;
    for i in 0..3 {
        let v = p.axis(i);
        let e = if v < b.min.axis(i) {
            b.min.axis(i) - v
        } else if v > b.max.axis(i) {
            v - b.max.axis(i)
        } else {
            0.0
        };
        d += e * e;
    }
    d
}

/// Bounding volume hierarchy over mesh faces for nearest-surface queries.
#[derive(Debug, Clone)]
pub struct FaceBvh<'a> {
    mesh: &'a TriangleMesh,
    order: Vec<usize>,
    nodes: Vec<BvhNode>,
}

impl<'a> FaceBvh<'a> {
    pub fn build(mesh: &'a TriangleMesh) -> Result<Self> {
        if mesh.faces.is_empty() {
            return Err(Error::EmptyMesh);
        }
        let boxes: Vec<Bbox> = (0..mesh.faces.len())
            .map(|f| Bbox::of_points(&mesh.triangle(f)).unwrap())
            .collect();
        let mut order: Vec<usize> = (0..mesh.faces.len()).collect();
        let mut nodes = Vec::new();
        build_bvh(&boxes, &mut order, 0, &mut nodes);
        Ok(FaceBvh { mesh, order, nodes })
    }

    /// Distance from `p` to the nearest point of the mesh surface.
    pub fn distance(&self, p: Point3) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if bbox_dist_sq(node.bbox(), p) > best * best {
                continue;
            }
            match *node {
                BvhNode::Leaf { start, end, .. } => {
                    for &f in &self.order[start..end] {
                        let d = point_triangle_distance(p, &self.mesh.triangle(f));
                        if d < best {
                            best = d;
                        }
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    let dl = bbox_dist_sq(self.nodes[left].bbox(), p);
                    let dr = bbox_dist_sq(self.nodes[right].bbox(), p);
                    // Push the farther child first so the nearer is explored first.
                    if dl <= dr {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }
}

fn build_bvh(boxes: &[Bbox], order: &mut [usize], offset: usize, nodes: &mut Vec<BvhNode>) -> usize {
    let bbox = order
        .iter()
        .map(|&f| boxes[f])
        .reduce(|a, b| Bbox {
            min: a.min.min(b.min),
            max: a.max.max(b.max),
        })
        .unwrap();
    let id = nodes.len();
    if order.len() <= BVH_LEAF_SIZE {
        nodes.push(BvhNode::Leaf {
            bbox,
            start: offset,
            end: offset + order.len(),
        });
        return id;
    }
    let centroid = |f: usize| boxes[f].center();
    let extent = bbox.max - bbox.min;
    let axis = (0..3)
        .max_by(|&a, &b| extent.axis(a).total_cmp(&extent.axis(b)))
        .unwrap();
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroid(a).axis(axis).total_cmp(&centroid(b).axis(axis)).then(a.cmp(&b))
    });
    nodes.push(BvhNode::Leaf { bbox, start: 0, end: 0 });
    let (l, r) = order.split_at_mut(mid);
    let left = build_bvh(boxes, l, offset, nodes);
    let right = build_bvh(boxes, r, offset + mid, nodes);
    nodes[id] = BvhNode::Inner { bbox, left, right };
    id
}

/// Brute-force distance to the nearest face.
pub fn mesh_distance_brute(mesh: &TriangleMesh, p: Point3) -> f64 {
    (0..mesh.faces.len())
        .map(|f| point_triangle_distance(p, &mesh.triangle(f)))
        .fold(f64::INFINITY, f64::min)
}

/// Per-point distances from `cloud` to the mesh surface.
pub fn p2f_distances(cloud: &PointCloud, mesh: &TriangleMesh) -> Result<Vec<f64>> {
    if mesh.faces.is_empty() {
        return Err(Error::EmptyMesh);
    }
    if mesh.faces.len() < BVH_MIN_FACES {
        return Ok(cloud.points().par_iter().map(|&p| mesh_distance_brute(mesh, p)).collect());
    }
    let bvh = FaceBvh::build(mesh)?;
    Ok(cloud.points().par_iter().map(|&p| bvh.distance(p)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct P2fStats {
    pub mean: f64,
    pub max: f64,
}

pub fn p2f(cloud: &PointCloud, mesh: &TriangleMesh) -> Result<P2fStats> {
    let d = p2f_distances(cloud, mesh)?;
    Ok(P2fStats {
        mean: pairwise_sum(&d) / d.len() as f64,
        max: d.iter().copied().fold(0.0, f64::max),
    })
}
