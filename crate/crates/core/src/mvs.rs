//! Point-cloud depth maps and depth-based visibility.

use rayon::prelude::*;

use crate::camera::CameraView;
use crate::maps::DepthMap;
use crate::Vec3;

/// Default visibility slack, mm.
pub const DEFAULT_TAU: f64 = 5.0;
/// Default splat half-width, pixels.
pub const DEFAULT_SPLAT_RADIUS: usize = 1;

/// Min-z splat of every point over a `(2r+1)^2` pixel square.
pub fn render_depth(view: &CameraView, cloud: &[Vec3], splat_radius: usize) -> DepthMap {
    let (w, h) = (view.width as i64, view.height as i64);
    let r = splat_radius as i64;
    let hits: Vec<(i64, i64, f64)> = cloud
        .par_iter()
        .filter_map(|p| {
            let pr = view.project(p)?;
            let (x, y) = (pr.uv.x.round(), pr.uv.y.round());
            if !(x.is_finite() && y.is_finite()) {
                return None;
            }
            let (x, y) = (x as i64, y as i64);
            if x + r < 0 || y + r < 0 || x - r >= w || y - r >= h {
                return None;
            }
            Some((x, y, pr.z))
        })
        .collect();
    let mut depth = DepthMap::empty(view.width, view.height);
    for (x, y, z) in hits {
        for yy in (y - r).max(0)..=(y + r).min(h - 1) {
            for xx in (x - r).max(0)..=(x + r).min(w - 1) {
                depth.splat_min(xx as usize, yy as usize, z);
            }
        }
    }
    depth
}

/// `clamp(1 - (z - D(uv)) / tau, 0, 1)`; zero outside the image, behind the
/// camera, or where the depth map is empty.
pub fn visibility(p: &Vec3, view: &CameraView, depth: &DepthMap, tau: f64) -> f64 {
    let Some(pr) = view.project(p) else {
        return 0.0;
    };
    let Some((x, y)) = view.pixel_of(&pr.uv) else {
        return 0.0;
    };
    let d = depth.get(x, y);
    if !d.is_finite() {
        return 0.0;
    }
    (1.0 - (pr.z - d) / tau).clamp(0.0, 1.0)
}

/// True when `p` is invisible in every view.
pub fn classify_interior(p: &Vec3, views: &[(CameraView, DepthMap)], tau: f64) -> bool {
    views.iter().all(|(v, d)| visibility(p, v, d, tau) == 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    fn view() -> CameraView {
        CameraView::new(
            1000.0,
            1000.0,
            320.0,
            240.0,
            Matrix3::identity(),
            Vec3::zeros(),
            640,
            480,
        )
        .unwrap()
    }

    #[test]
    fn single_point_splats_three_by_three() {
        let d = render_depth(&view(), &[Vec3::new(0.0, 0.0, 500.0)], 1);
        assert_eq!(d.finite_count(), 9);
        for y in 239..=241 {
            for x in 319..=321 {
                assert_eq!(d.get(x, y), 500.0);
            }
        }
    }

    #[test]
    fn nearest_depth_kept() {
        let d = render_depth(
            &view(),
            &[Vec3::new(0.0, 0.0, 500.0), Vec3::new(0.0, 0.0, 400.0)],
            0,
        );
        assert_eq!(d.get(320, 240), 400.0);
        let behind = render_depth(&view(), &[Vec3::new(0.0, 0.0, -5.0)], 1);
        assert_eq!(behind.finite_count(), 0);
    }

    #[test]
    fn visibility_is_linear_in_depth_gap() {
        let v = view();
        let d = render_depth(&v, &[Vec3::new(0.0, 0.0, 500.0)], 1);
        assert_eq!(visibility(&Vec3::new(0.0, 0.0, 500.0), &v, &d, 5.0), 1.0);
        assert!((visibility(&Vec3::new(0.0, 0.0, 502.5), &v, &d, 5.0) - 0.5).abs() < 1e-12);
        assert_eq!(visibility(&Vec3::new(0.0, 0.0, 505.0), &v, &d, 5.0), 0.0);
        assert_eq!(visibility(&Vec3::new(0.0, 0.0, -1.0), &v, &d, 5.0), 0.0);
    }

    #[test]
    fn point_in_front_of_surface_is_not_interior() {
        let v = view();
        let d = render_depth(&v, &[Vec3::new(0.0, 0.0, 500.0)], 1);
        assert!(!classify_interior(
            &Vec3::new(0.0, 0.0, 450.0),
            &[(v, d)],
            5.0
        ));
    }
}
