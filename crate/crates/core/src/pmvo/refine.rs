use rayon::prelude::*;

use crate::line::{align_to, LineMap};
use crate::spatial::PointIndex;
use crate::Vec3;

use super::PmvoConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RefineStats {
    pub replaced: usize,
}

/// One Jacobi pass: each direction is compared against the sign-aligned mean
/// of its nearest neighbors (self excluded) and replaced by that mean when
/// `1 - |cos|` exceeds the threshold.
pub fn refine_once(map: &LineMap, cfg: &PmvoConfig) -> (LineMap, RefineStats) {
    let n = map.len();
    let k = cfg.neighbor_count.min(n.saturating_sub(1));
    if k == 0 {
        return (map.clone(), RefineStats::default());
    }
    let positions = map.positions();
    let dirs: Vec<Vec3> = map.points().iter().map(|p| p.direction()).collect();
    let index = PointIndex::new(&positions);
    let updated: Vec<(Vec3, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = dirs[i];
            let mut ids: Vec<usize> = index
                .nearest_n(&positions[i], k + 1)
                .into_iter()
                .map(|nb| nb.index)
                .filter(|&j| j != i)
                .take(k)
                .collect();
            ids.sort_unstable();
            let sum: Vec3 = ids.iter().map(|&j| align_to(dirs[j], &d)).sum();
            let Some(avg) = sum.try_normalize(1e-12) else {
                return (d, false);
            };
            let deviation = 1.0 - d.dot(&avg).abs().min(1.0);
            if deviation > cfg.variance_threshold {
                (avg, true)
            } else {
                (d, false)
            }
        })
        .collect();
    let replaced = updated.iter().filter(|u| u.1).count();
    let new_dirs: Vec<Vec3> = updated.into_iter().map(|u| u.0).collect();
    (map.with_directions(&new_dirs), RefineStats { replaced })
}

/// Applies `cfg.refine_iterations` refinement passes.
pub fn refine_lines(map: &LineMap, cfg: &PmvoConfig) -> LineMap {
    let mut cur = map.clone();
    for _ in 0..cfg.refine_iterations {
        let (next, stats) = refine_once(&cur, cfg);
        cur = next;
        if stats.replaced == 0 {
            break;
        }
    }
    cur
}
