//! Interior completion of the hair volume from its visible exterior.
//!
//! The exterior line map is splatted into the grid and closed
//! morphologically into a shell. The region between the scalp and the shell
//! is flood filled from just above the scalp; it becomes occupied and gets
//! its directions by diffusing the exterior directions and a scalp prior
//! inward. Exterior voxels are never modified.

use std::collections::VecDeque;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridSpec, OrientationGrid};
use crate::line::{align_to, LineMap};
use crate::scalp::ScalpModel;
use crate::Vec3;

/// `min(|b - a|_1, |b + a|_1) / 3`: zero for parallel or antiparallel unit
/// vectors.
pub fn sign_invariant_distance(d: &Vec3, d_hat: &Vec3) -> f64 {
    let minus = (d_hat - d).abs().sum();
    let plus = (d_hat + d).abs().sum();
    minus.min(plus) / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OpenShellPolicy {
    /// Fail with the hole sites.
    #[default]
    Error,
    /// Log the holes and return the exterior voxels alone.
    ExteriorOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteriorConfig {
    /// Closing radius in voxels (cubic structuring element).
    pub closing_radius: usize,
    pub diffusion_sweeps: usize,
    /// Flood-fill seeds sit this many voxels above each scalp vertex.
    pub seed_offset: f64,
    pub open_shell: OpenShellPolicy,
}

impl Default for InteriorConfig {
    fn default() -> Self {
        InteriorConfig {
            closing_radius: 2,
            diffusion_sweeps: 30,
            seed_offset: 1.5,
            open_shell: OpenShellPolicy::Error,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InteriorResult {
    pub grid: OrientationGrid,
    /// Largest change of a voxel's (unnormalized) direction vector in each
    /// diffusion sweep.
    pub sweep_changes: Vec<f64>,
    /// Hole sites when the shell was open and the policy allowed a fallback.
    pub open_holes: Option<Vec<[f64; 3]>>,
}

/// Bins line points into voxels. Each occupied voxel gets the sign-aligned
/// mean of its points (aligned to the first point) and the exterior flag.
pub fn splat_line_map(map: &LineMap, spec: &GridSpec) -> OrientationGrid {
    let mut sums: Vec<Option<Vec3>> = vec![None; spec.len()];
    for p in map.points() {
        let Some(v) = spec.voxel_of(&p.position) else {
            continue;
        };
        let i = spec.linear(v);
        let d = p.direction();
        sums[i] = Some(match sums[i] {
            None => d,
            Some(s) => s + align_to(d, &s),
        });
    }
    let mut grid = OrientationGrid::empty(*spec);
    for (i, s) in sums.iter().enumerate() {
        if let Some(s) = s.and_then(|s| s.try_normalize(1e-12)) {
            grid.set_linear(i, s, true);
        }
    }
    grid
}

/// Separable max filter with a cubic window of half-width `r`.
fn dilate(spec: &GridSpec, src: &[bool], r: usize) -> Vec<bool> {
    let mut cur = src.to_vec();
    for axis in 0..3 {
        let mut next = vec![false; cur.len()];
        let n = spec.dims[axis];
        next.par_iter_mut().enumerate().for_each(|(i, out)| {
            let idx = spec.unlinear(i);
            let c = idx[axis];
            let lo = c.saturating_sub(r);
            let hi = (c + r).min(n - 1);
            let mut probe = idx;
            for t in lo..=hi {
                probe[axis] = t;
                if cur[spec.linear(probe)] {
                    *out = true;
                    return;
                }
            }
        });
        cur = next;
    }
    cur
}

/// Erosion where everything beyond the grid counts as empty.
fn erode(spec: &GridSpec, src: &[bool], r: usize) -> Vec<bool> {
    let inv: Vec<bool> = src.iter().map(|b| !b).collect();
    let mut grown = dilate(spec, &inv, r);
    grown.par_iter_mut().enumerate().for_each(|(i, g)| {
        let idx = spec.unlinear(i);
        if (0..3).any(|a| idx[a] < r || idx[a] + r >= spec.dims[a]) {
            *g = true;
        }
    });
    grown.iter().map(|b| !b).collect()
}

pub fn close_shell(spec: &GridSpec, occupied: &[bool], r: usize) -> Vec<bool> {
    if r == 0 {
        return occupied.to_vec();
    }
    let closed = erode(spec, &dilate(spec, occupied, r), r);
    closed.iter().zip(occupied).map(|(c, o)| *c || *o).collect()
}

/// Marks voxels touched by the scalp surface (dense barycentric sampling).
fn rasterize_scalp(scalp: &ScalpModel, spec: &GridSpec) -> Vec<bool> {
    let mut out = vec![false; spec.len()];
    let step = spec.voxel_size / 3.0;
    for f in 0..scalp.faces().len() {
        let [a, b, c] = scalp.triangle(f);
        let longest = (b - a).norm().max((c - a).norm()).max((c - b).norm());
        let n = (longest / step).ceil().max(1.0) as usize;
        for i in 0..=n {
            for j in 0..=(n - i) {
                let p = scalp.point_on_face(f, i as f64 / n as f64, j as f64 / n as f64);
                if let Some(v) = spec.voxel_of(&p) {
                    out[spec.linear(v)] = true;
                }
            }
        }
    }
    out
}

fn vertex_normals(scalp: &ScalpModel) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); scalp.vertices().len()];
    for (f, face) in scalp.faces().iter().enumerate() {
        let n = scalp.face_normal(f) * scalp.face_area(f);
        for &v in face {
            acc[v as usize] += n;
        }
    }
    acc.into_iter()
        .map(|n| n.try_normalize(1e-12).unwrap_or_else(Vec3::z))
        .collect()
}

/// Tangent-plane projection of straight down, or the normal where the
/// surface is horizontal.
pub fn root_prior(normal: &Vec3) -> Vec3 {
    let down = -Vec3::z();
    (down - normal * normal.dot(&down))
        .try_normalize(1e-6)
        .unwrap_or(*normal)
}

fn on_boundary(spec: &GridSpec, idx: [usize; 3]) -> bool {
    (0..3).any(|a| idx[a] == 0 || idx[a] + 1 == spec.dims[a])
}

struct Fill {
    region: Vec<bool>,
    escapes: Vec<usize>,
    parent: Vec<u32>,
}

fn flood(spec: &GridSpec, barrier: &[bool], seeds: &[usize]) -> Fill {
    const NONE: u32 = u32::MAX;
    let mut region = vec![false; spec.len()];
    let mut parent = vec![NONE; spec.len()];
    let mut queue = VecDeque::new();
    let mut escapes = Vec::new();
    for &s in seeds {
        if !barrier[s] && !region[s] {
            region[s] = true;
            parent[s] = s as u32;
            queue.push_back(s);
        }
    }
    while let Some(i) = queue.pop_front() {
        let idx = spec.unlinear(i);
        if on_boundary(spec, idx) {
            escapes.push(i);
        }
        for n in spec.neighbors6(idx) {
            let j = spec.linear(n);
            if !barrier[j] && !region[j] {
                region[j] = true;
                parent[j] = i as u32;
                queue.push_back(j);
            }
        }
    }
    Fill {
        region,
        escapes,
        parent,
    }
}

/// For a few escape paths, the path voxel most surrounded by shell voxels:
/// where the fill slipped through.
fn hole_sites(spec: &GridSpec, shell: &[bool], fill: &Fill, r: usize) -> Vec<[f64; 3]> {
    let w = (r + 1) as i64;
    let mut sites: Vec<[usize; 3]> = Vec::new();
    for &e in fill
        .escapes
        .iter()
        .step_by((fill.escapes.len() / 16).max(1))
    {
        let mut best = (0usize, e);
        let mut cur = e;
        loop {
            let idx = spec.unlinear(cur);
            let mut count = 0;
            for dz in -w..=w {
                for dy in -w..=w {
                    for dx in -w..=w {
                        let n = [idx[0] as i64 + dx, idx[1] as i64 + dy, idx[2] as i64 + dz];
                        if (0..3).all(|a| n[a] >= 0 && n[a] < spec.dims[a] as i64)
                            && shell[spec.linear([n[0] as usize, n[1] as usize, n[2] as usize])]
                        {
                            count += 1;
                        }
                    }
                }
            }
            if count > best.0 {
                best = (count, cur);
            }
            let p = fill.parent[cur] as usize;
            if p == cur {
                break;
            }
            cur = p;
        }
        let site = spec.unlinear(best.1);
        if sites
            .iter()
            .all(|s| (0..3).map(|a| s[a].abs_diff(site[a])).max().unwrap() > 4)
        {
            sites.push(site);
        }
    }
    sites
        .into_iter()
        .map(|s| {
            let c = spec.center(s);
            [c.x, c.y, c.z]
        })
        .collect()
}

pub fn complete_interior(
    map: &LineMap,
    scalp: &ScalpModel,
    spec: &GridSpec,
    cfg: &InteriorConfig,
) -> Result<InteriorResult> {
    if map.is_empty() {
        return Err(Error::EmptyInput("line map"));
    }
    let exterior = splat_line_map(map, spec);
    let ext_occ: Vec<bool> = (0..spec.len())
        .map(|i| exterior.is_occupied_linear(i))
        .collect();
    let shell = close_shell(spec, &ext_occ, cfg.closing_radius);
    let scalp_vox = rasterize_scalp(scalp, spec);
    let barrier: Vec<bool> = shell
        .iter()
        .zip(&scalp_vox)
        .map(|(a, b)| *a || *b)
        .collect();

    let normals = vertex_normals(scalp);
    let mut seeds: Vec<usize> = scalp
        .vertices()
        .iter()
        .zip(&normals)
        .filter_map(|(v, n)| spec.voxel_of(&(v + n * (cfg.seed_offset * spec.voxel_size))))
        .map(|v| spec.linear(v))
        .collect();
    seeds.sort_unstable();
    seeds.dedup();
    let fill = flood(spec, &barrier, &seeds);
    if !fill.escapes.is_empty() {
        let holes = hole_sites(spec, &shell, &fill, cfg.closing_radius);
        return match cfg.open_shell {
            OpenShellPolicy::Error => Err(Error::OpenShell {
                radius: cfg.closing_radius,
                holes,
            }),
            OpenShellPolicy::ExteriorOnly => {
                warn!(
                    "exterior shell is open at closing radius {} ({} hole sites); keeping exterior voxels only",
                    cfg.closing_radius,
                    holes.len()
                );
                Ok(InteriorResult {
                    grid: exterior,
                    sweep_changes: Vec::new(),
                    open_holes: Some(holes),
                })
            }
        };
    }

    // Scalp prior from the face nearest each scalp voxel.
    let mut prior: Vec<Option<Vec3>> = vec![None; spec.len()];
    for i in 0..spec.len() {
        if scalp_vox[i] && !ext_occ[i] {
            let c = spec.center(spec.unlinear(i));
            let hit = scalp.closest_point(&c);
            prior[i] = Some(root_prior(&scalp.face_normal(hit.face)));
        }
    }

    let occupied: Vec<bool> = (0..spec.len())
        .map(|i| ext_occ[i] || fill.region[i] || (shell[i] && !scalp_vox[i]))
        .collect();
    let (dirs, sweep_changes) = diffuse(spec, &exterior, &occupied, &prior, cfg.diffusion_sweeps);
    let mut grid = exterior.clone();
    for i in 0..spec.len() {
        if occupied[i] && !ext_occ[i] {
            if let Some(d) = dirs[i] {
                grid.set_linear(i, d, false);
            }
        }
    }
    Ok(InteriorResult {
        grid,
        sweep_changes,
        open_holes: None,
    })
}

/// Fills free voxels by breadth-first propagation from the fixed voxels,
/// then runs Jacobi sweeps averaging each voxel with its six neighbors.
/// Alignment signs between neighbors are taken once from the propagated
/// field, so every sweep is the same linear averaging step and the largest
/// per-voxel change cannot grow. Vectors stay unnormalized until the end.
/// Fixed voxels (exterior and scalp prior) never change.
fn diffuse(
    spec: &GridSpec,
    exterior: &OrientationGrid,
    occupied: &[bool],
    prior: &[Option<Vec3>],
    sweeps: usize,
) -> (Vec<Option<Vec3>>, Vec<f64>) {
    let n = spec.len();
    let mut dirs: Vec<Option<Vec3>> = vec![None; n];
    let mut fixed = vec![false; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        let d = exterior.direction_linear(i).or(prior[i]);
        if let Some(d) = d {
            dirs[i] = Some(d);
            fixed[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let d = dirs[i].unwrap();
        for nb in spec.neighbors6(spec.unlinear(i)) {
            let j = spec.linear(nb);
            if occupied[j] && dirs[j].is_none() {
                dirs[j] = Some(d);
                queue.push_back(j);
            }
        }
    }
    let free: Vec<usize> = (0..n)
        .filter(|&i| occupied[i] && !fixed[i] && dirs[i].is_some())
        .collect();
    let links: Vec<Vec<(usize, f64)>> = free
        .iter()
        .map(|&i| {
            let d = dirs[i].unwrap();
            spec.neighbors6(spec.unlinear(i))
                .map(|nb| spec.linear(nb))
                .filter_map(|j| dirs[j].map(|e| (j, if e.dot(&d) < 0.0 { -1.0 } else { 1.0 })))
                .collect()
        })
        .collect();
    let initial: Vec<Vec3> = free.iter().map(|&i| dirs[i].unwrap()).collect();
    let mut vals: Vec<Vec3> = dirs.iter().map(|d| d.unwrap_or_else(Vec3::zeros)).collect();
    let mut changes = Vec::with_capacity(sweeps);
    for _ in 0..sweeps {
        let updates: Vec<Vec3> = free
            .par_iter()
            .zip(&links)
            .map(|(&i, nbs)| {
                let sum: Vec3 = vals[i] + nbs.iter().map(|&(j, s)| vals[j] * s).sum::<Vec3>();
                sum / (1 + nbs.len()) as f64
            })
            .collect();
        let mut max_change: f64 = 0.0;
        for (&i, v) in free.iter().zip(updates) {
            max_change = max_change.max((v - vals[i]).norm());
            vals[i] = v;
        }
        changes.push(max_change);
    }
    for (k, &i) in free.iter().enumerate() {
        dirs[i] = Some(vals[i].try_normalize(1e-9).unwrap_or(initial[k]));
    }
    (dirs, changes)
}
