use rayon::prelude::*;

use crate::geometry::DiscreteVarifold;
use crate::Vec3;

/// Nearest target point for each query point: `(index, distance)`.
/// Exhaustive search; ties go to the lowest target index.
pub fn nearest_neighbors(queries: &[Vec3], targets: &[Vec3]) -> Vec<(usize, f64)> {
    queries
        .par_iter()
        .map(|q| {
            let mut best = (usize::MAX, f64::INFINITY);
            for (j, t) in targets.iter().enumerate() {
                let d2 = (q - t).norm_squared();
                if d2 < best.1 {
                    best = (j, d2);
                }
            }
            (best.0, best.1.sqrt())
        })
        .collect()
}

/// Mean distance from each source center to its closest target center.
/// Zero exactly when every source center coincides with some target center.
pub fn icp_dissimilarity(s: &DiscreteVarifold, t: &DiscreteVarifold) -> f64 {
    mean_closest_distance(s.centers(), t.centers())
}

pub(crate) fn mean_closest_distance(source: &[Vec3], target: &[Vec3]) -> f64 {
    let nn = nearest_neighbors(source, target);
    nn.iter().map(|&(_, d)| d).sum::<f64>() / nn.len() as f64
}
