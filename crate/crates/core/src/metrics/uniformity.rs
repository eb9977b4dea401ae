//! Local uniformity score over farthest-point-sampled seeds.
//!
//! For a radius fraction `p` the ball radius is `sqrt(p)` (the cloud is
//! assumed normalized to the unit sphere). Around each seed, with `n` points
//! in the ball and `n_hat = p * N`:
//!
//! ```text
//! imbalance = (n - n_hat)^2 / n_hat
//! d_hat     = sqrt(2 pi r^2 / (sqrt(3) n))
//! clutter   = mean over ball points of (d_nn - d_hat)^2 / d_hat
//! score     = mean over seeds of imbalance * clutter
//! ```
//!
//! `d_nn` is each ball point's nearest-neighbor distance within the ball.
//! A ball holding only its seed uses `d_nn = r`. An empty ball contributes
//! its imbalance alone.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::{Point3, PointCloud};
use crate::spatial::{farthest_point_sample, KnnIndex};

pub const DEFAULT_RADIUS_FRACTIONS: [f64; 4] = [0.004, 0.006, 0.008, 0.010];
pub const MAX_SEEDS: usize = 1000;
const BRUTE_FORCE_BALL: usize = 64;

/// `min(1000, max(16, N / 8))`, capped at `N`.
pub fn default_num_seeds(n: usize) -> usize {
    (n / 8).clamp(16, MAX_SEEDS).min(n)
}

/// Hexagonal-packing spacing for `n` points in a disk of radius `r`.
pub fn expected_spacing(r: f64, n: usize) -> f64 {
    (2.0 * std::f64::consts::PI * r * r / (3f64.sqrt() * n as f64)).sqrt()
}

/// Mean of `(d_nn - d_hat)^2 / d_hat` over the points of one ball.
pub fn clutter_term(ball: &[Point3], r: f64) -> f64 {
    let n = ball.len();
    if n == 0 {
        return 0.0;
    }
    let d_hat = expected_spacing(r, n);
    if n == 1 {
        return (r - d_hat).powi(2) / d_hat;
    }
    let term = |d_nn: f64| (d_nn - d_hat).powi(2) / d_hat;
    let terms: Vec<f64> = if n <= BRUTE_FORCE_BALL {
        ball.iter()
            .enumerate()
            .map(|(i, &p)| {
                let d2 = ball
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &q)| p.dist_sq(q))
                    .fold(f64::INFINITY, f64::min);
                term(d2.sqrt())
            })
            .collect()
    } else {
        let index = KnnIndex::from_points(ball.to_vec()).expect("ball is non-empty");
        ball.iter()
            .enumerate()
            .map(|(i, &p)| {
                let nn = index.knn(p, 2).expect("ball has two points");
                let other = if nn[0].index == i { nn[1] } else { nn[0] };
                term(other.dist)
            })
            .collect()
    };
    terms.iter().sum::<f64>() / n as f64
}

fn seed_score(index: &KnnIndex, seed: Point3, r: f64, n_hat: f64) -> f64 {
    let members = index.within_radius(seed, r);
    let n = members.len();
    let imbalance = (n as f64 - n_hat).powi(2) / n_hat;
    if n == 0 {
        return imbalance;
    }
    let ball: Vec<Point3> = members.iter().map(|&i| index.points()[i]).collect();
    imbalance * clutter_term(&ball, r)
}

/// Uniformity score per radius fraction, in the order given.
pub fn uniformity(cloud: &PointCloud, radius_fractions: &[f64], num_seeds: usize) -> Result<Vec<(f64, f64)>> {
    if num_seeds == 0 {
        return Err(Error::InvalidConfig("num_seeds must be >= 1".into()));
    }
    if let Some(&bad) = radius_fractions.iter().find(|&&p| !(p > 0.0 && p.is_finite())) {
        return Err(Error::InvalidConfig(format!("radius fraction {} must be positive", bad)));
    }
    let seeds = farthest_point_sample(cloud, num_seeds.min(cloud.len()), 0)?;
    let index = KnnIndex::build(cloud);
    let n = cloud.len() as f64;
    Ok(radius_fractions
        .iter()
        .map(|&p| {
            let r = p.sqrt();
            let n_hat = p * n;
            let scores: Vec<f64> = seeds
                .par_iter()
                .map(|&s| seed_score(&index, cloud[s], r, n_hat))
                .collect();
            (p, super::pairwise_sum(&scores) / scores.len() as f64)
        })
        .collect())
}
