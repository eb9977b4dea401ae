use rayon::prelude::*;

use super::pairwise_sum;
use crate::error::Result;
use crate::geom::PointCloud;
use crate::spatial::KnnIndex;

/// Squared distance from each point of `from` to its nearest point in `to`.
pub fn nearest_sq_distances(from: &PointCloud, to: &KnnIndex) -> Vec<f64> {
    from.points().par_iter().map(|&p| to.nearest(p).1).collect()
}

fn directional_means(p: &PointCloud, q: &PointCloud, squared: bool) -> (f64, f64) {
    let p_index = KnnIndex::build(p);
    let q_index = KnnIndex::build(q);
    let mean = |cloud: &PointCloud, index: &KnnIndex| {
        let mut d = nearest_sq_distances(cloud, index);
        if !squared {
            d.iter_mut().for_each(|x| *x = x.sqrt());
        }
        pairwise_sum(&d) / d.len() as f64
    };
    (mean(p, &q_index), mean(q, &p_index))
}

/// Sum of the two directional mean squared nearest-neighbor distances.
pub fn chamfer_l2(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    let (a, b) = directional_means(p, q, true);
    Ok(a + b)
}

/// Average of the two directional mean nearest-neighbor distances.
pub fn chamfer_l1(p: &PointCloud, q: &PointCloud) -> Result<f64> {
    let (a, b) = directional_means(p, q, false);
    Ok(0.5 * (a + b))
}
