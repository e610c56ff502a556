use std::f64::consts::PI;

use rayon::prelude::*;

use crate::camera::{CameraView, Ray};
use crate::line::{LineMap, OrientedPoint};
use crate::{Vec2, Vec3};

use super::loss::{cost_with_support, view_samples, ViewSample};
use super::{ObservedView, PmvoConfig};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Optimized line at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub point: OrientedPoint,
    pub cost: f64,
    /// Views that contributed a nonzero weight to `cost`.
    pub support_views: usize,
    /// With a single supporting view the component along that view's ray is
    /// not determined by the data.
    pub depth_constrained: bool,
    pub reference_view: usize,
}

/// Closest distance between two half-lines `a.origin + s a.dir`,
/// `b.origin + t b.dir` with `s, t >= 0`.
pub fn ray_distance(a: &Ray, b: &Ray) -> f64 {
    let w = a.origin - b.origin;
    let (da, db) = (a.direction, b.direction);
    let aa = da.dot(&da);
    let bb = db.dot(&db);
    let ab = da.dot(&db);
    let aw = da.dot(&w);
    let bw = db.dot(&w);
    let dist = |s: f64, t: f64| (a.at(s) - b.at(t)).norm();
    let mut best = dist(0.0, 0.0);
    let denom = aa * bb - ab * ab;
    if denom > 1e-12 * aa * bb {
        let s = (ab * bw - bb * aw) / denom;
        let t = (aa * bw - ab * aw) / denom;
        if s >= 0.0 && t >= 0.0 {
            best = best.min(dist(s, t));
        }
    }
    if bb > 0.0 {
        best = best.min(dist(0.0, (bw / bb).max(0.0)));
    }
    if aa > 0.0 {
        best = best.min(dist((-aw / aa).max(0.0), 0.0));
    }
    best
}

/// The plane of directions consistent with a reference view's 2D orientation
/// at `p`, parameterized as `cos(phi) * lateral + sin(phi) * ray`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissiblePlane {
    /// Unit viewing ray from the camera center through `p`.
    pub ray: Vec3,
    /// Unit in-plane direction orthogonal to `ray`.
    pub lateral: Vec3,
    /// Camera ray through the far end of the 2D line (one pixel along `O`).
    pub gamma: Ray,
}

impl AdmissiblePlane {
    pub fn direction(&self, phi: f64) -> Vec3 {
        let (s, c) = phi.sin_cos();
        self.lateral * c + self.ray * s
    }
}

pub fn admissible_plane(
    p: &Vec3,
    camera: &CameraView,
    orientation: f64,
) -> Option<AdmissiblePlane> {
    let ray = (p - camera.center()).try_normalize(1e-12)?;
    let (s, c) = orientation.sin_cos();
    let lifted = camera.direction_to_world(&Vec3::new(c / camera.fx, s / camera.fy, 0.0));
    let lateral = (lifted - ray * ray.dot(&lifted)).try_normalize(1e-12)?;
    let uv = camera.project(p)?.uv;
    let gamma = camera.pixel_ray(&(uv + Vec2::new(c, s)));
    Some(AdmissiblePlane {
        ray,
        lateral,
        gamma,
    })
}

fn reference_frames(samples: &[ViewSample], cfg: &PmvoConfig) -> Vec<ViewSample> {
    let mut refs: Vec<ViewSample> = samples
        .iter()
        .filter(|s| s.center_masked && s.center_conf >= cfg.confidence_floor)
        .copied()
        .collect();
    refs.sort_by(|a, b| {
        b.center_conf
            .total_cmp(&a.center_conf)
            .then(a.view.cmp(&b.view))
    });
    refs.truncate(cfg.reference_count);
    refs
}

fn golden_section(mut lo: f64, mut hi: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Finds the line direction at `p` minimizing the multi-view cost over the
/// admissible planes of the most confident reference views. `None` when no
/// view sees `p` with usable confidence.
pub fn optimize_line(p: &Vec3, views: &[ObservedView], cfg: &PmvoConfig) -> Option<LineFit> {
    let samples = view_samples(p, views, cfg);
    let refs = reference_frames(&samples, cfg);
    let cost = |d: &Vec3| cost_with_support(p, d, &samples, views, cfg).0;
    let n = cfg.angular_samples;
    let step = PI / n as f64;
    let mut best: Option<(f64, AdmissiblePlane, f64, usize)> = None;
    for r in &refs {
        let v = &views[r.view];
        let pr = v.camera.project(p)?;
        let (x, y) = v.camera.pixel_of(&pr.uv)?;
        let o = v.orientation.get(x, y)?;
        let Some(plane) = admissible_plane(p, &v.camera, o) else {
            continue;
        };
        for k in 0..n {
            let phi = (k as f64 + 0.5) * step;
            let c = cost(&plane.direction(phi));
            if best.as_ref().is_none_or(|b| c < b.0) {
                best = Some((c, plane, phi, r.view));
            }
        }
    }
    let (mut c, plane, mut phi, reference_view) = best?;
    if !c.is_finite() {
        return None;
    }
    let (gphi, gc) = golden_section(
        phi - step,
        phi + step,
        cfg.search_tolerance_deg.to_radians(),
        |t| cost(&plane.direction(t)),
    );
    if gc < c {
        c = gc;
        phi = gphi;
    }
    let d = plane.direction(phi);
    let (_, support) = cost_with_support(p, &d, &samples, views, cfg);
    Some(LineFit {
        point: OrientedPoint::new(*p, d).ok()?,
        cost: c,
        support_views: support,
        depth_constrained: support >= 2,
        reference_view,
    })
}

/// Optimizes every point in parallel; the output is index-aligned with `cloud`.
pub fn optimize_all(
    cloud: &[Vec3],
    views: &[ObservedView],
    cfg: &PmvoConfig,
) -> Vec<Option<LineFit>> {
    cloud
        .par_iter()
        .map(|p| optimize_line(p, views, cfg))
        .collect()
}

/// Keep rule: strictly below the cost threshold, with enough supporting views.
pub fn keep_line(fit: &LineFit, cfg: &PmvoConfig) -> bool {
    fit.cost < cfg.keep_threshold && fit.support_views >= cfg.min_support_views
}

/// Retains visible, well-fitting lines. Points that were never optimized
/// (invisible everywhere) are dropped.
pub fn filter_lines(fits: &[Option<LineFit>], cfg: &PmvoConfig) -> LineMap {
    let kept = fits
        .iter()
        .flatten()
        .filter(|f| keep_line(f, cfg))
        .map(|f| f.point)
        .collect();
    LineMap::with_spacing(kept, cfg.sample_spacing)
}
