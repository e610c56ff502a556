use crate::error::{Error, Result};
use crate::line::canonical_sign;
use crate::maps::{ConfidenceMap, OrientationMap};
use crate::mvs::visibility;
use crate::{Vec2, Vec3};

use super::{ObservedView, PmvoConfig};

/// Confidence-weighted angular disagreement over a patch together with the
/// confidence mass it was accumulated over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatchLoss {
    pub loss: f64,
    pub mass: f64,
}

pub(crate) fn patch_loss_unit(
    orient: &OrientationMap,
    conf: &ConfidenceMap,
    uv: &Vec2,
    l2d: &Vec2,
    r: usize,
    floor: f64,
) -> PatchLoss {
    let cx = uv.x.round() as i64;
    let cy = uv.y.round() as i64;
    let h = (r / 2) as i64;
    let (w, ht) = (orient.width() as i64, orient.height() as i64);
    let mut out = PatchLoss {
        loss: 0.0,
        mass: 0.0,
    };
    for y in (cy - h).max(0)..=(cy + h).min(ht - 1) {
        for x in (cx - h).max(0)..=(cx + h).min(w - 1) {
            let (x, y) = (x as usize, y as usize);
            let Some(o) = orient.get(x, y) else { continue };
            let c = conf.get(x, y);
            if c < floor || c <= 0.0 {
                continue;
            }
            let (s, co) = o.sin_cos();
            let cos = (co * l2d.x + s * l2d.y).abs().min(1.0);
            out.loss += c * (1.0 - cos);
            out.mass += c;
        }
    }
    out
}

/// Sum over the `r x r` patch around `uv` of `C * (1 - |cos(O - angle(l2d))|)`.
/// Unmasked pixels and pixels with confidence below 1e-3 are skipped.
pub fn patch_angular_loss(
    orient: &OrientationMap,
    conf: &ConfidenceMap,
    uv: &Vec2,
    l2d: &Vec2,
    r: usize,
) -> Result<f64> {
    let n = l2d.norm();
    if !(n > 1e-12 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "2D line direction must be nonzero, got {l2d:?}"
        )));
    }
    Ok(patch_loss_unit(orient, conf, uv, &(l2d / n), r, 1e-3).loss)
}

/// Per-view data that depends only on the point, not on its direction.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ViewSample {
    pub view: usize,
    pub uv: Vec2,
    pub weight: f64,
    pub center_conf: f64,
    pub center_masked: bool,
}

pub(crate) fn view_samples(p: &Vec3, views: &[ObservedView], cfg: &PmvoConfig) -> Vec<ViewSample> {
    let mut out = Vec::new();
    for (i, v) in views.iter().enumerate() {
        let vis = visibility(p, &v.camera, &v.depth, cfg.tau);
        if vis <= 0.0 {
            continue;
        }
        let pr = v.camera.project(p).expect("visible points project");
        let (x, y) = v
            .camera
            .pixel_of(&pr.uv)
            .expect("visible points are in the image");
        let c = v.confidence.get(x, y);
        let weight = vis * c;
        if weight <= 0.0 {
            continue;
        }
        out.push(ViewSample {
            view: i,
            uv: pr.uv,
            weight,
            center_conf: c,
            center_masked: v.orientation.get(x, y).is_some(),
        });
    }
    out
}

/// Weighted cost for direction `d` and the number of views contributing.
pub(crate) fn cost_with_support(
    p: &Vec3,
    d: &Vec3,
    samples: &[ViewSample],
    views: &[ObservedView],
    cfg: &PmvoConfig,
) -> (f64, usize) {
    let d = canonical_sign(*d);
    let tip = p + d * cfg.projection_offset;
    let mut num = 0.0;
    let mut den = 0.0;
    let mut support = 0;
    for s in samples {
        let v = &views[s.view];
        let l2d = v
            .camera
            .project(&tip)
            .map(|q| q.uv - s.uv)
            .and_then(|l| l.try_normalize(1e-12));
        let g = match l2d {
            Some(l) => {
                let pl = patch_loss_unit(
                    &v.orientation,
                    &v.confidence,
                    &s.uv,
                    &l,
                    cfg.patch_size,
                    cfg.confidence_floor,
                );
                if pl.mass <= 0.0 {
                    continue;
                }
                pl.loss / pl.mass
            }
            None => 1.0,
        };
        num += s.weight * g;
        den += s.weight;
        support += 1;
    }
    if den > 0.0 {
        (num / den, support)
    } else {
        (f64::INFINITY, 0)
    }
}

/// `L_opt` of the line through `p` with direction `d`: the visibility- and
/// confidence-weighted mean of the per-view patch loss, each normalized by
/// its patch confidence mass. `None` when no view sees the point.
pub fn multiview_cost(p: &Vec3, d: &Vec3, views: &[ObservedView], cfg: &PmvoConfig) -> Option<f64> {
    let samples = view_samples(p, views, cfg);
    let (c, support) = cost_with_support(p, d, &samples, views, cfg);
    (support > 0).then_some(c)
}
