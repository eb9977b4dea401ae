//! Earth Mover's Distance between equal-size clouds: the mean Euclidean
//! distance under the optimal bijection.
//!
//! Up to [`EXACT_LIMIT`] points the assignment is solved exactly with the
//! Hungarian method (shortest augmenting paths with potentials, O(n^3)).
//! Above it an epsilon-scaling auction is used, run until its duality bound
//! certifies a relative gap of at most [`AUCTION_TARGET_GAP`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};

pub const EXACT_LIMIT: usize = 1024;
pub const AUCTION_TARGET_GAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmdResult {
    pub value: f64,
    pub exact: bool,
    /// Certified upper bound on `(value - optimum) / optimum`; zero when exact.
    pub relative_gap: f64,
}

pub fn emd(p: &PointCloud, q: &PointCloud) -> Result<EmdResult> {
    if p.len() != q.len() {
        return Err(Error::SizeMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let n = p.len();
    if n <= EXACT_LIMIT {
        let assignment = hungarian(p.points(), q.points());
        Ok(EmdResult {
            value: assignment_cost(p.points(), q.points(), &assignment) / n as f64,
            exact: true,
            relative_gap: 0.0,
        })
    } else {
        let (assignment, gap) = auction(p.points(), q.points(), AUCTION_TARGET_GAP);
        Ok(EmdResult {
            value: assignment_cost(p.points(), q.points(), &assignment) / n as f64,
            exact: false,
            relative_gap: gap,
        })
    }
}

/// Total distance of `p[i] -> q[assignment[i]]`.
pub fn assignment_cost(p: &[Point3], q: &[Point3], assignment: &[usize]) -> f64 {
    let d: Vec<f64> = p
        .iter()
        .zip(assignment)
        .map(|(&a, &j)| a.dist(q[j]))
        .collect();
    super::pairwise_sum(&d)
}

/// Minimum-cost perfect matching on the Euclidean cost matrix. Returns
/// `assignment[i] = j` meaning `p[i]` is matched to `q[j]`.
pub fn hungarian(p: &[Point3], q: &[Point3]) -> Vec<usize> {
    let n = p.len();
    // 1-based arrays with a virtual column 0, following the classic
    // potentials formulation.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|x| *x = f64::INFINITY);
        used.iter_mut().for_each(|x| *x = false);
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let pi = p[i0 - 1];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = pi.dist(q[j - 1]) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        assignment[matched_row[j] - 1] = j - 1;
    }
    assignment
}

/// Forward auction with epsilon scaling on benefits `-dist`.
///
/// At termination every person is within `eps` of its best object, so the
/// assignment cost exceeds the optimum by at most `n * eps`. Returns the
/// assignment and the certified relative gap.
pub fn auction(p: &[Point3], q: &[Point3], target_gap: f64) -> (Vec<usize>, f64) {
    let n = p.len();
    let all: Vec<Point3> = p.iter().chain(q.iter()).copied().collect();
    let max_d = crate::geom::Bbox::of_points(&all)
        .map(|b| b.diagonal())
        .unwrap_or(0.0)
        .max(f64::MIN_POSITIVE);
    let mut prices = vec![0.0f64; n];
    let mut eps = max_d / 4.0;
    let mut best = (Vec::new(), f64::INFINITY);

    for _phase in 0..60 {
        let assignment = auction_phase(p, q, &mut prices, eps);
        let cost = assignment_cost(p, q, &assignment);
        let slack = n as f64 * eps;
        let lower = (cost - slack).max(0.0);
        let gap = if cost == 0.0 {
            0.0
        } else if lower > 0.0 {
            slack / lower
        } else {
            f64::INFINITY
        };
        if gap < best.1 || best.0.is_empty() {
            best = (assignment, gap);
        }
        if best.1 <= target_gap || eps < max_d * 1e-15 {
            break;
        }
        eps /= 5.0;
    }
    best
}

fn auction_phase(p: &[Point3], q: &[Point3], prices: &mut [f64], eps: f64) -> Vec<usize> {
    const NONE: usize = usize::MAX;
    let n = p.len();
    let mut owner = vec![NONE; n];
    let mut assigned = vec![NONE; n];
    let mut queue: Vec<usize> = (0..n).rev().collect();

    while let Some(i) = queue.pop() {
        let pi = p[i];
        let mut best_j = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        let mut second_v = f64::NEG_INFINITY;
        for (j, (&qj, &price)) in q.iter().zip(prices.iter()).enumerate() {
            let value = -pi.dist(qj) - price;
            if value > best_v {
                second_v = best_v;
                best_v = value;
                best_j = j;
            } else if value > second_v {
                second_v = value;
            }
        }
        let increment = if second_v.is_finite() { best_v - second_v } else { 0.0 };
        prices[best_j] += increment + eps;
        let previous = owner[best_j];
        owner[best_j] = i;
        assigned[i] = best_j;
        if previous != NONE {
            assigned[previous] = NONE;
            queue.push(previous);
        }
    }
    assigned
}
