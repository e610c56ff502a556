//! Scalp triangle mesh and its root sites.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::Vec3;

/// Distance under which a root site counts as lying on the mesh.
const ON_MESH_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalpModel {
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
    roots: Vec<Vec3>,
}

/// Closest point on a mesh together with its face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshHit {
    pub point: Vec3,
    pub distance: f64,
    pub face: usize,
}

impl ScalpModel {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>, roots: Vec<Vec3>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::Validation("scalp mesh has no faces".into()));
        }
        if let Some(f) = faces
            .iter()
            .find(|f| f.iter().any(|&i| i as usize >= vertices.len()))
        {
            return Err(Error::Validation(format!(
                "scalp face {f:?} indexes past {} vertices",
                vertices.len()
            )));
        }
        let model = ScalpModel {
            vertices,
            faces,
            roots: Vec::new(),
        };
        for (i, r) in roots.iter().enumerate() {
            let hit = model.closest_point(r);
            if hit.distance > ON_MESH_TOL {
                return Err(Error::Validation(format!(
                    "root site {i} lies {:.3e} mm off the scalp mesh",
                    hit.distance
                )));
            }
        }
        Ok(ScalpModel { roots, ..model })
    }

    /// Triangulated spherical cap around +z: polar angle `0..=max_polar`.
    pub fn sphere_cap(
        center: Vec3,
        radius: f64,
        max_polar: f64,
        rings: usize,
        segments: usize,
    ) -> Self {
        assert!(rings >= 1 && segments >= 3);
        let mut vertices = vec![center + Vec3::new(0.0, 0.0, radius)];
        for r in 1..=rings {
            let theta = max_polar * r as f64 / rings as f64;
            for s in 0..segments {
                let phi = 2.0 * PI * s as f64 / segments as f64;
                vertices.push(
                    center
                        + radius
                            * Vec3::new(
                                theta.sin() * phi.cos(),
                                theta.sin() * phi.sin(),
                                theta.cos(),
                            ),
                );
            }
        }
        let ring_start = |r: usize| 1 + (r - 1) * segments;
        let mut faces = Vec::new();
        for s in 0..segments {
            let a = ring_start(1) + s;
            let b = ring_start(1) + (s + 1) % segments;
            faces.push([0, a as u32, b as u32]);
        }
        for r in 1..rings {
            for s in 0..segments {
                let a = ring_start(r) + s;
                let b = ring_start(r) + (s + 1) % segments;
                let c = ring_start(r + 1) + s;
                let d = ring_start(r + 1) + (s + 1) % segments;
                faces.push([a as u32, c as u32, d as u32]);
                faces.push([a as u32, d as u32, b as u32]);
            }
        }
        ScalpModel {
            vertices,
            faces,
            roots: Vec::new(),
        }
    }

    pub fn with_roots(self, roots: Vec<Vec3>) -> Result<Self> {
        ScalpModel::new(self.vertices, self.faces, roots)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn roots(&self) -> &[Vec3] {
        &self.roots
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let f = self.faces[face];
        [
            self.vertices[f[0] as usize],
            self.vertices[f[1] as usize],
            self.vertices[f[2] as usize],
        ]
    }

    /// Unit normal of a face, following its winding.
    pub fn face_normal(&self, face: usize) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        (b - a)
            .cross(&(c - a))
            .try_normalize(1e-15)
            .unwrap_or_else(Vec3::z)
    }

    /// Point on `face` at barycentric weights `(1 - u - v, u, v)`.
    pub fn point_on_face(&self, face: usize, u: f64, v: f64) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        a + (b - a) * u + (c - a) * v
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Brute-force closest point over all faces; ties resolve to the lowest
    /// face index.
    pub fn closest_point(&self, p: &Vec3) -> MeshHit {
        let mut best = MeshHit {
            point: Vec3::zeros(),
            distance: f64::INFINITY,
            face: 0,
        };
        for face in 0..self.faces.len() {
            let [a, b, c] = self.triangle(face);
            let q = closest_point_on_triangle(p, &a, &b, &c);
            let d = (q - p).norm();
            if d < best.distance {
                best = MeshHit {
                    point: q,
                    distance: d,
                    face,
                };
            }
        }
        best
    }

    pub fn distance(&self, p: &Vec3) -> f64 {
        self.closest_point(p).distance
    }

    /// Axis-aligned bounds of the mesh vertices.
    pub fn bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision
/// Detection, 5.1.5).
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closest_point_regions() {
        let a = Vec3::zeros();
        let b = Vec3::x();
        let c = Vec3::y();
        assert_eq!(
            closest_point_on_triangle(&Vec3::new(0.25, 0.25, 3.0), &a, &b, &c),
            Vec3::new(0.25, 0.25, 0.0)
        );
        assert_eq!(
            closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c),
            a
        );
        assert_eq!(
            closest_point_on_triangle(&Vec3::new(0.5, -2.0, 0.0), &a, &b, &c),
            Vec3::new(0.5, 0.0, 0.0)
        );
    }

    #[test]
    fn cap_normals_point_outward() {
        let cap = ScalpModel::sphere_cap(Vec3::zeros(), 90.0, 1.2, 8, 16);
        for f in 0..cap.faces().len() {
            let [a, b, c] = cap.triangle(f);
            let centroid = (a + b + c) / 3.0;
            assert!(cap.face_normal(f).dot(&centroid) > 0.0, "face {f}");
        }
        let top = cap.distance(&Vec3::new(0.0, 0.0, 100.0));
        assert!((top - 10.0).abs() < 1e-9);
    }

    #[test]
    fn off_mesh_root_rejected() {
        let cap = ScalpModel::sphere_cap(Vec3::zeros(), 90.0, 1.2, 8, 16);
        let on = cap.point_on_face(5, 0.2, 0.3);
        assert!(cap.clone().with_roots(vec![on]).is_ok());
        assert!(cap.with_roots(vec![on * 1.01]).is_err());
    }
}
