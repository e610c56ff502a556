//! Pinhole cameras with a world-to-camera pose.
//!
//! Camera space follows the usual vision convention: +z looks forward, +x
//! points right and +y points down in the image. Pixel centers sit on integer
//! coordinates, so pixel `(i, j)` covers `[i - 0.5, i + 0.5) x [j - 0.5, j + 0.5)`.

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{Vec2, Vec3};

const ORTHO_TOL: f64 = 1e-6;

/// A projected point: pixel coordinates plus camera-space depth in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub uv: Vec2,
    pub z: f64,
}

/// Half-line `origin + t * direction`, `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub direction: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, direction: Vec3) -> Self {
        Ray { origin, direction }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.direction * t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraView {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    rotation: Matrix3<f64>,
    translation: Vec3,
    pub width: u32,
    pub height: u32,
}

impl CameraView {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        rotation: Matrix3<f64>,
        translation: Vec3,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::Validation(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Validation(format!(
                "image size must be positive, got {width}x{height}"
            )));
        }
        let deviation = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if !(deviation < ORTHO_TOL) {
            return Err(Error::Validation(format!(
                "rotation is not orthonormal (|R^T R - I| = {deviation:e})"
            )));
        }
        if rotation.determinant() < 0.0 {
            return Err(Error::Validation(
                "rotation has negative determinant".into(),
            ));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation("translation is not finite".into()));
        }
        Ok(CameraView {
            fx,
            fy,
            cx,
            cy,
            rotation,
            translation,
            width,
            height,
        })
    }

    /// Builds a view at `eye` looking at `target`; `up` fixes the roll.
    #[allow(clippy::too_many_arguments)]
    pub fn look_at(
        eye: Vec3,
        target: Vec3,
        up: Vec3,
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let forward = (target - eye)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Validation("eye and target coincide".into()))?;
        let right = forward
            .cross(&up)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::Validation("up vector is parallel to the view axis".into()))?;
        let down = forward.cross(&right);
        let rotation =
            Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye);
        CameraView::new(fx, fy, cx, cy, rotation, translation, width, height)
    }

    /// Builds a view from a row-major 4x4 world-to-camera matrix.
    #[allow(clippy::too_many_arguments)]
    pub fn from_matrix(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        world_to_camera: &Matrix4<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        let last = world_to_camera.row(3);
        if (last[0].abs() + last[1].abs() + last[2].abs() + (last[3] - 1.0).abs()) > 1e-9 {
            return Err(Error::Validation(
                "world-to-camera matrix must have last row [0 0 0 1]".into(),
            ));
        }
        let rotation: Matrix3<f64> = world_to_camera.fixed_view::<3, 3>(0, 0).into();
        let translation: Vec3 = world_to_camera.fixed_view::<3, 1>(0, 3).into();
        CameraView::new(fx, fy, cx, cy, rotation, translation, width, height)
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vec3 {
        &self.translation
    }

    pub fn world_to_camera(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vec3 {
        -(self.rotation.transpose() * self.translation)
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn to_world(&self, q: &Vec3) -> Vec3 {
        self.rotation.transpose() * (q - self.translation)
    }

    /// Rotates a world direction into camera space.
    pub fn direction_to_camera(&self, d: &Vec3) -> Vec3 {
        self.rotation * d
    }

    pub fn direction_to_world(&self, d: &Vec3) -> Vec3 {
        self.rotation.transpose() * d
    }

    /// Projects a world point. Points at or behind the camera plane have no
    /// projection.
    pub fn project(&self, p: &Vec3) -> Option<Projection> {
        let q = self.to_camera(p);
        if !(q.z > 0.0) {
            return None;
        }
        let uv = Vector2::new(self.fx * q.x / q.z + self.cx, self.fy * q.y / q.z + self.cy);
        Some(Projection { uv, z: q.z })
    }

    /// Inverse of [`CameraView::project`].
    pub fn back_project(&self, uv: &Vec2, z: f64) -> Vec3 {
        let q = Vector3::new(
            (uv.x - self.cx) / self.fx * z,
            (uv.y - self.cy) / self.fy * z,
            z,
        );
        self.to_world(&q)
    }

    /// World-space ray from the camera center through pixel coordinates `uv`.
    pub fn pixel_ray(&self, uv: &Vec2) -> Ray {
        let q = Vector3::new((uv.x - self.cx) / self.fx, (uv.y - self.cy) / self.fy, 1.0);
        Ray::new(self.center(), self.direction_to_world(&q).normalize())
    }

    /// Integer pixel holding `uv`, if inside the image.
    pub fn pixel_of(&self, uv: &Vec2) -> Option<(usize, usize)> {
        let x = uv.x.round();
        let y = uv.y.round();
        if x >= 0.0 && y >= 0.0 && x < self.width as f64 && y < self.height as f64 {
            Some((x as usize, y as usize))
        } else {
            None
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Serialized camera entry: intrinsics, row-major world-to-camera matrix and
/// image size.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CameraRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub world_to_camera: [f64; 16],
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct CameraSetRecord {
    pub views: Vec<CameraRecord>,
}

impl From<&CameraView> for CameraRecord {
    fn from(view: &CameraView) -> Self {
        let m = view.world_to_camera();
        let mut world_to_camera = [0.0; 16];
        for r in 0..4 {
            for c in 0..4 {
                world_to_camera[r * 4 + c] = m[(r, c)];
            }
        }
        CameraRecord {
            name: None,
            fx: view.fx,
            fy: view.fy,
            cx: view.cx,
            cy: view.cy,
            world_to_camera,
            width: view.width,
            height: view.height,
        }
    }
}

impl TryFrom<&CameraRecord> for CameraView {
    type Error = Error;

    fn try_from(rec: &CameraRecord) -> Result<Self> {
        let m = Matrix4::from_row_slice(&rec.world_to_camera);
        CameraView::from_matrix(rec.fx, rec.fy, rec.cx, rec.cy, &m, rec.width, rec.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn identity_view() -> CameraView {
        CameraView::new(
            1000.0,
            1000.0,
            640.0,
            360.0,
            Matrix3::identity(),
            Vec3::zeros(),
            1280,
            720,
        )
        .unwrap()
    }

    #[test]
    fn principal_axis_projects_to_principal_point() {
        let p = identity_view()
            .project(&Vec3::new(0.0, 0.0, 100.0))
            .unwrap();
        assert_eq!(p.uv, Vec2::new(640.0, 360.0));
        assert_eq!(p.z, 100.0);
    }

    #[test]
    fn lateral_offset_follows_similar_triangles() {
        let p = identity_view()
            .project(&Vec3::new(10.0, 0.0, 100.0))
            .unwrap();
        assert_eq!(p.uv, Vec2::new(740.0, 360.0));
    }

    #[test]
    fn behind_camera_has_no_projection() {
        assert!(identity_view()
            .project(&Vec3::new(0.0, 0.0, -5.0))
            .is_none());
        assert!(identity_view().project(&Vec3::new(1.0, 0.0, 0.0)).is_none());
    }

    #[test]
    fn non_orthonormal_rotation_rejected() {
        let mut r = Matrix3::identity();
        r[(0, 0)] = 1.01;
        let err = CameraView::new(1.0, 1.0, 0.0, 0.0, r, Vec3::zeros(), 4, 4).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn look_at_puts_target_on_principal_point() {
        let view = CameraView::look_at(
            Vec3::new(600.0, 0.0, 0.0),
            Vec3::zeros(),
            Vec3::z(),
            800.0,
            800.0,
            320.0,
            240.0,
            640,
            480,
        )
        .unwrap();
        let p = view.project(&Vec3::zeros()).unwrap();
        assert_relative_eq!(p.uv, Vec2::new(320.0, 240.0), epsilon = 1e-9);
        assert_relative_eq!(p.z, 600.0, epsilon = 1e-9);
        // world +z is image up, i.e. decreasing v
        let up = view.project(&Vec3::new(0.0, 0.0, 10.0)).unwrap();
        assert!(up.uv.y < 240.0);
        assert_relative_eq!(view.center(), Vec3::new(600.0, 0.0, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn record_round_trip() {
        let view = CameraView::look_at(
            Vec3::new(100.0, -400.0, 50.0),
            Vec3::zeros(),
            Vec3::z(),
            700.0,
            710.0,
            320.0,
            250.0,
            640,
            512,
        )
        .unwrap();
        let rec = CameraRecord::from(&view);
        let back = CameraView::try_from(&rec).unwrap();
        assert_relative_eq!(
            back.world_to_camera(),
            view.world_to_camera(),
            epsilon = 1e-12
        );
    }
}
