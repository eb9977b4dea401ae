//! Exact k-nearest-neighbor search over a static kd-tree, plus farthest point
//! sampling.
//!
//! All comparisons use squared Euclidean distance computed by
//! [`Point3::dist_sq`]; ties are broken by the smaller point index so results
//! match a brute-force scan bit for bit.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// A neighbor hit: point index and Euclidean distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Immutable kd-tree over a point cloud.
#[derive(Debug, Clone)]
pub struct KnnIndex {
    points: Vec<Point3>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KnnIndex {
    pub fn build(cloud: &PointCloud) -> KnnIndex {
        Self::from_points(cloud.points().to_vec()).expect("point clouds are non-empty")
    }

    pub fn from_points(points: Vec<Point3>) -> Result<KnnIndex> {
        if points.is_empty() {
            return Err(Error::EmptyCloud);
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        let mut nodes = Vec::with_capacity(2 * points.len() / LEAF_SIZE + 1);
        build_node(&points, &mut order, 0, &mut nodes);
        Ok(KnnIndex {
            points,
            order,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    /// The `k` nearest points to `q`, ascending by distance then index.
    pub fn knn(&self, q: Point3, k: usize) -> Result<Vec<Neighbor>> {
        if k == 0 || k > self.points.len() {
            return Err(Error::KTooLarge {
                k,
                n: self.points.len(),
            });
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(0, q, k, &mut heap);
        let mut hits = heap.into_vec();
        hits.sort();
        Ok(hits
            .into_iter()
            .map(|c| Neighbor {
                index: c.index,
                dist: c.dist_sq.sqrt(),
            })
            .collect())
    }

    /// Nearest point to `q` as `(index, squared distance)`.
    pub fn nearest(&self, q: Point3) -> (usize, f64) {
        let mut heap = BinaryHeap::with_capacity(2);
        self.search(0, q, 1, &mut heap);
        let c = heap.pop().expect("index is non-empty");
        (c.index, c.dist_sq)
    }

    /// Indices of all points with `|p - q| <= radius`, in ascending index order.
    pub fn within_radius(&self, q: Point3, radius: f64) -> Vec<usize> {
        let r2 = radius * radius;
        let mut out = Vec::new();
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            match self.nodes[n] {
                Node::Leaf { start, end } => {
                    for &i in &self.order[start..end] {
                        if self.points[i].dist_sq(q) <= r2 {
                            out.push(i);
                        }
                    }
                }
                Node::Split {
                    axis,
                    value,
                    left,
                    right,
                } => {
                    let d = q.axis(axis) - value;
                    if d <= radius {
                        stack.push(left);
                    }
                    if -d <= radius {
                        stack.push(right);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    fn search(&self, node: usize, q: Point3, k: usize, heap: &mut BinaryHeap<Candidate>) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    let c = Candidate {
                        dist_sq: self.points[i].dist_sq(q),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let d = q.axis(axis) - value;
                let (near, far) = if d <= 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, heap);
                // Points in the far half are at least |d| away; equality must
                // still be visited for the index tie-break.
                if heap.len() < k || d * d <= heap.peek().unwrap().dist_sq {
                    self.search(far, q, k, heap);
                }
            }
        }
    }
}

fn build_node(points: &[Point3], order: &mut [usize], offset: usize, nodes: &mut Vec<Node>) -> usize {
    let id = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len(),
        });
        return id;
    }

    let mut lo = points[order[0]];
    let mut hi = lo;
    for &i in order.iter() {
        lo = lo.min(points[i]);
        hi = hi.max(points[i]);
    }
    let extent = hi - lo;
    let axis = (0..3)
        .max_by(|&a, &b| extent.axis(a).total_cmp(&extent.axis(b)).then(b.cmp(&a)))
        .unwrap();
    if extent.axis(axis) == 0.0 {
        // All points coincide; a single leaf is exact.
        nodes.push(Node::Leaf {
            start: offset,
            end: offset + order.len(),
        });
        return id;
    }

    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        points[a].axis(axis).total_cmp(&points[b].axis(axis)).then(a.cmp(&b))
    });
    let value = points[order[mid]].axis(axis);

    // Left holds coordinates <= value, right holds >= value. The search rule
    // visits both sides whenever the query could be tied across the plane.
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let (left_part, right_part) = order.split_at_mut(mid);
    let left = build_node(points, left_part, offset, nodes);
    let right = build_node(points, right_part, offset + mid, nodes);
    nodes[id] = Node::Split {
        axis,
        value,
        left,
        right,
    };
    id
}

/// Greedy farthest point sampling starting from `seed_index`.
///
/// Each pick maximizes the distance to the already-selected set; ties go to
/// the smaller index.
pub fn farthest_point_sample(cloud: &PointCloud, m: usize, seed_index: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if m == 0 || m > n {
        return Err(Error::MTooLarge { m, n });
    }
    if seed_index >= n {
        return Err(Error::IndexOutOfRange { index: seed_index, n });
    }
    let pts = cloud.points();
    let mut picked = Vec::with_capacity(m);
    let mut min_d = vec![f64::INFINITY; n];
    let mut current = seed_index;
    picked.push(current);
    while picked.len() < m {
        // Selected points never win again, even among duplicates.
        min_d[current] = f64::NEG_INFINITY;
        let c = pts[current];
        let mut best = usize::MAX;
        let mut best_d = -1.0;
        for (i, (p, d)) in pts.iter().zip(min_d.iter_mut()).enumerate() {
            let di = p.dist_sq(c);
            if di < *d {
                *d = di;
            }
            if *d > best_d {
                best_d = *d;
                best = i;
            }
        }
        current = best;
        picked.push(current);
    }
    Ok(picked)
}
