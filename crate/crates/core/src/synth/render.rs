use std::cmp::Ordering;

use crate::camera::CameraView;
use crate::maps::{wrap_orientation, ConfidenceMap, DepthMap, OrientationMap};
use crate::strand::StrandSet;
use crate::Vec3;

fn lex(a: &Vec3, b: &Vec3) -> Ordering {
    a.x.total_cmp(&b.x)
        .then(a.y.total_cmp(&b.y))
        .then(a.z.total_cmp(&b.z))
}

/// Analytic orientation, confidence and depth maps of a strand set.
///
/// Every polyline segment is sampled at most half a pixel apart in the image
/// and stamped as a disc of `line_radius` pixels. Per pixel the smallest
/// `(depth, angle)` pair wins, so the result does not depend on strand order
/// or vertex direction. Confidence is 1 on hair pixels and 0 elsewhere.
pub fn render_gt_maps(
    strands: &StrandSet,
    view: &CameraView,
    line_radius: usize,
) -> (OrientationMap, ConfidenceMap, DepthMap) {
    let (w, h) = (view.width, view.height);
    let n = w as usize * h as usize;
    let mut best: Vec<(f64, f64)> = vec![(f64::INFINITY, f64::INFINITY); n];
    let r = line_radius as i64;
    let r2 = r * r;
    for s in &strands.strands {
        for seg in s.vertices.windows(2) {
            let (a, b) = if lex(&seg[1], &seg[0]) == Ordering::Less {
                (seg[1], seg[0])
            } else {
                (seg[0], seg[1])
            };
            let (Some(pa), Some(pb)) = (view.project(&a), view.project(&b)) else {
                continue;
            };
            let dir = pb.uv - pa.uv;
            let len = dir.norm();
            if len < 1e-12 {
                continue;
            }
            let angle = wrap_orientation(dir.y.atan2(dir.x));
            let steps = ((len / 0.5).ceil() as usize).max(1);
            for k in 0..=steps {
                let q = a + (b - a) * (k as f64 / steps as f64);
                let Some(pr) = view.project(&q) else { continue };
                let cx = pr.uv.x.round() as i64;
                let cy = pr.uv.y.round() as i64;
                for dy in -r..=r {
                    for dx in -r..=r {
                        if dx * dx + dy * dy > r2 {
                            continue;
                        }
                        let (x, y) = (cx + dx, cy + dy);
                        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                            continue;
                        }
                        let i = y as usize * w as usize + x as usize;
                        let cand = (pr.z, angle);
                        if cand
                            .0
                            .total_cmp(&best[i].0)
                            .then(cand.1.total_cmp(&best[i].1))
                            == Ordering::Less
                        {
                            best[i] = cand;
                        }
                    }
                }
            }
        }
    }
    let mut orient = OrientationMap::empty(w, h);
    let mut conf = ConfidenceMap::zeros(w, h);
    let mut depth = DepthMap::empty(w, h);
    for (i, &(z, a)) in best.iter().enumerate() {
        if z.is_finite() {
            let (x, y) = (i % w as usize, i / w as usize);
            orient.set(x, y, a);
            conf.set(x, y, 1.0);
            depth.splat_min(x, y, z);
        }
    }
    (orient, conf, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strand::Strand;
    use nalgebra::Matrix3;

    fn frontal() -> CameraView {
        CameraView::new(
            500.0,
            500.0,
            64.0,
            64.0,
            Matrix3::identity(),
            Vec3::zeros(),
            128,
            128,
        )
        .unwrap()
    }

    fn set(lines: &[(Vec3, Vec3)]) -> StrandSet {
        StrandSet::new(
            lines
                .iter()
                .map(|(a, b)| {
                    Strand::new(
                        (0..=20).map(|k| a + (b - a) * (k as f64 / 20.0)).collect(),
                        false,
                    )
                    .unwrap()
                })
                .collect(),
        )
    }

    #[test]
    fn vertical_strand_is_ninety_degrees() {
        let s = set(&[(Vec3::new(0.0, -20.0, 300.0), Vec3::new(0.0, 20.0, 300.0))]);
        let (o, c, _) = render_gt_maps(&s, &frontal(), 1);
        assert!(o.masked_count() > 0);
        for y in 0..128 {
            for x in 0..128 {
                if let Some(a) = o.get(x, y) {
                    assert!((a - std::f64::consts::FRAC_PI_2).abs() < 1e-6);
                    assert_eq!(c.get(x, y), 1.0);
                }
            }
        }
    }

    #[test]
    fn reversal_does_not_change_maps() {
        let s = set(&[(Vec3::new(-10.0, -20.0, 300.0), Vec3::new(15.0, 20.0, 320.0))]);
        let r = StrandSet::new(s.strands.iter().map(|s| s.reversed()).collect());
        let a = render_gt_maps(&s, &frontal(), 1);
        let b = render_gt_maps(&r, &frontal(), 1);
        assert_eq!(a.0, b.0);
        assert_eq!(a.2, b.2);
    }

    #[test]
    fn nearer_strand_owns_crossing() {
        let near = (Vec3::new(-20.0, 0.0, 250.0), Vec3::new(20.0, 0.0, 250.0));
        let far = (Vec3::new(0.0, -20.0, 300.0), Vec3::new(0.0, 20.0, 300.0));
        let (o, _, d) = render_gt_maps(&set(&[far, near]), &frontal(), 1);
        assert!(o.get(64, 64).unwrap().abs() < 1e-6);
        assert!((d.get(64, 64) - 250.0).abs() < 1e-4);
    }
}
