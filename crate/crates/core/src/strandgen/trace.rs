use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::OrientationGrid;
use crate::line::align_to;
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraceConfig {
    /// Euler step, mm; `None` means half a voxel.
    pub step: Option<f64>,
    /// Per direction.
    pub max_steps: usize,
    /// Seeds are the first occupied voxel of each `stride^3` block.
    pub seed_stride: usize,
    /// Vertices are trimmed when their voxel already carries an accepted
    /// segment within this angle, degrees.
    pub dedupe_angle_deg: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            step: None,
            max_steps: 4000,
            seed_stride: 2,
            dedupe_angle_deg: 30.0,
        }
    }
}

/// Trilinear blend of the occupied corner directions around `p`, each
/// flipped into the hemisphere of `reference`. `None` when no corner is
/// occupied or the blend cancels.
pub fn interpolate_direction(grid: &OrientationGrid, p: &Vec3, reference: &Vec3) -> Option<Vec3> {
    let spec = grid.spec();
    let u = spec.to_voxel_coords(p) - Vec3::repeat(0.5);
    let base = [u.x.floor(), u.y.floor(), u.z.floor()];
    let frac = [u.x - base[0], u.y - base[1], u.z - base[2]];
    let mut sum = Vec3::zeros();
    for corner in 0..8 {
        let mut idx = [0usize; 3];
        let mut w = 1.0;
        let mut inside = true;
        for a in 0..3 {
            let bit = (corner >> a) & 1;
            let c = base[a] as i64 + bit as i64;
            if c < 0 || c >= spec.dims[a] as i64 {
                inside = false;
                break;
            }
            idx[a] = c as usize;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
        }
        if !inside || w == 0.0 {
            continue;
        }
        if let Some(d) = grid.direction(idx) {
            sum += align_to(d, reference) * w;
        }
    }
    if sum.norm() < 1e-6 {
        return None;
    }
    Some(sum.normalize())
}

fn march(grid: &OrientationGrid, seed: &Vec3, d0: Vec3, h: f64, max_steps: usize) -> Vec<Vec3> {
    let spec = grid.spec();
    let mut out = Vec::new();
    let mut x = *seed;
    let mut run = d0;
    for _ in 0..max_steps {
        let Some(d) = interpolate_direction(grid, &x, &run) else {
            break;
        };
        if d.dot(&run) <= 0.0 {
            break;
        }
        let next = x + d * h;
        match spec.voxel_of(&next) {
            Some(v) if grid.is_occupied(v) => {}
            _ => break,
        }
        out.push(next);
        x = next;
        run = d;
    }
    out
}

/// Forward and backward Euler integration from `seed`; the backward half is
/// reversed in front of the seed. `None` for an empty seed voxel or a trace
/// shorter than 3 vertices.
pub fn trace_from(
    grid: &OrientationGrid,
    seed: &Vec3,
    h: f64,
    max_steps: usize,
) -> Option<Vec<Vec3>> {
    let v = grid.spec().voxel_of(seed)?;
    let d0 = grid.direction(v)?;
    let fwd = march(grid, seed, d0, h, max_steps);
    let bwd = march(grid, seed, -d0, h, max_steps);
    let mut line: Vec<Vec3> = bwd.into_iter().rev().collect();
    line.push(*seed);
    line.extend(fwd);
    (line.len() >= 3).then_some(line)
}

/// Center of the first occupied voxel (x fastest) of every `stride^3` block.
pub fn stratified_seeds(grid: &OrientationGrid, stride: usize) -> Vec<Vec3> {
    let spec = grid.spec();
    let s = stride.max(1);
    let blocks = [
        spec.dims[0].div_ceil(s),
        spec.dims[1].div_ceil(s),
        spec.dims[2].div_ceil(s),
    ];
    let mut first: HashMap<[usize; 3], usize> = HashMap::new();
    for i in grid.occupied_indices() {
        let v = spec.unlinear(i);
        first.entry([v[0] / s, v[1] / s, v[2] / s]).or_insert(i);
    }
    let mut ids: Vec<(usize, usize)> = first
        .into_iter()
        .map(|(b, i)| ((b[2] * blocks[1] + b[1]) * blocks[0] + b[0], i))
        .collect();
    ids.sort_unstable();
    ids.into_iter()
        .map(|(_, i)| spec.center(spec.unlinear(i)))
        .collect()
}

/// Removes vertices whose voxel is already covered, in a similar direction,
/// by an earlier accepted segment; surviving runs of 3+ vertices are kept.
pub fn dedupe_segments(
    grid: &OrientationGrid,
    segments: Vec<Vec<Vec3>>,
    max_angle_deg: f64,
) -> Vec<Vec<Vec3>> {
    let spec = grid.spec();
    let cos_max = max_angle_deg.to_radians().cos();
    let mut covered: HashMap<usize, Vec<Vec3>> = HashMap::new();
    let mut out = Vec::new();
    for seg in segments {
        let tangents = crate::strand::polyline_tangents(&seg);
        let mut runs: Vec<Vec<Vec3>> = Vec::new();
        let mut cur: Vec<Vec3> = Vec::new();
        let mut keys = Vec::new();
        for (p, t) in seg.iter().zip(&tangents) {
            let key = spec.voxel_of(p).map(|v| spec.linear(v));
            let dup = key
                .and_then(|k| covered.get(&k))
                .is_some_and(|ds| ds.iter().any(|d| d.dot(t).abs() >= cos_max));
            if dup {
                if cur.len() >= 3 {
                    runs.push(std::mem::take(&mut cur));
                } else {
                    cur.clear();
                }
            } else {
                cur.push(*p);
                if let Some(k) = key {
                    keys.push((k, *t));
                }
            }
        }
        if cur.len() >= 3 {
            runs.push(cur);
        }
        if !runs.is_empty() {
            for (k, t) in keys {
                covered.entry(k).or_default().push(t);
            }
        }
        out.extend(runs);
    }
    out
}

/// Traces from every seed in parallel, in seed order, then de-duplicates.
pub fn trace_segments(grid: &OrientationGrid, seeds: &[Vec3], cfg: &TraceConfig) -> Vec<Vec<Vec3>> {
    let h = cfg.step.unwrap_or(grid.spec().voxel_size / 2.0);
    let raw: Vec<Vec<Vec3>> = seeds
        .par_iter()
        .filter_map(|s| trace_from(grid, s, h, cfg.max_steps))
        .collect();
    dedupe_segments(grid, raw, cfg.dedupe_angle_deg)
}
