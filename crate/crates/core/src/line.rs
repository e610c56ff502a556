//! Oriented 3D points and line maps.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::Vec3;

/// Default minimum spacing between line-map points, in mm.
pub const DEFAULT_SAMPLE_SPACING: f64 = 0.5;

/// Flips `d` so that its first nonzero component is positive.
pub fn canonical_sign(d: Vec3) -> Vec3 {
    for i in 0..3 {
        if d[i] > 0.0 {
            return d;
        }
        if d[i] < 0.0 {
            return -d;
        }
    }
    d
}

/// Flips `d` into the hemisphere of `reference`.
pub fn align_to(d: Vec3, reference: &Vec3) -> Vec3 {
    if d.dot(reference) < 0.0 {
        -d
    } else {
        d
    }
}

/// Acute angle between two undirected lines, in radians.
pub fn line_angle(a: &Vec3, b: &Vec3) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    c.acos()
}

/// A 3D position carrying a sign-ambiguous unit direction (`d` and `-d` are
/// the same line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedPoint {
    pub position: Vec3,
    direction: Vec3,
}

impl OrientedPoint {
    /// Normalizes and canonicalizes `direction`.
    pub fn new(position: Vec3, direction: Vec3) -> Result<Self> {
        let n = direction.norm();
        if !(n > 1e-12) || !n.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "oriented point needs a nonzero direction, got {direction:?}"
            )));
        }
        if !position.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite position".into()));
        }
        Ok(OrientedPoint {
            position,
            direction: canonical_sign(direction / n),
        })
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }
}

/// A set of oriented points with a guaranteed minimum spacing.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineMap {
    points: Vec<OrientedPoint>,
    spacing: f64,
}

impl LineMap {
    /// Builds a map with the default 0.5 mm spacing.
    pub fn new(points: Vec<OrientedPoint>) -> Self {
        LineMap::with_spacing(points, DEFAULT_SAMPLE_SPACING)
    }

    /// Greedy in-order deduplication: a point is dropped when an earlier kept
    /// point lies strictly closer than `spacing`.
    pub fn with_spacing(points: Vec<OrientedPoint>, spacing: f64) -> Self {
        if spacing <= 0.0 {
            return LineMap { points, spacing };
        }
        let key = |p: &Vec3| {
            [
                (p.x / spacing).floor() as i64,
                (p.y / spacing).floor() as i64,
                (p.z / spacing).floor() as i64,
            ]
        };
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        let mut kept: Vec<OrientedPoint> = Vec::with_capacity(points.len());
        let s2 = spacing * spacing;
        for pt in points {
            let k = key(&pt.position);
            let mut clash = false;
            'outer: for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        if let Some(ids) = cells.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                            if ids
                                .iter()
                                .any(|&i| (kept[i].position - pt.position).norm_squared() < s2)
                            {
                                clash = true;
                                break 'outer;
                            }
                        }
                    }
                }
            }
            if !clash {
                cells.entry(k).or_default().push(kept.len());
                kept.push(pt);
            }
        }
        LineMap {
            points: kept,
            spacing,
        }
    }

    pub fn points(&self) -> &[OrientedPoint] {
        &self.points
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.points.iter().map(|p| p.position).collect()
    }

    /// Replaces directions in place, keeping positions and spacing.
    pub(crate) fn with_directions(&self, directions: &[Vec3]) -> LineMap {
        assert_eq!(directions.len(), self.points.len());
        let points = self
            .points
            .iter()
            .zip(directions)
            .map(|(p, d)| {
                let n = d.norm();
                OrientedPoint {
                    position: p.position,
                    direction: canonical_sign(if (n - 1.0).abs() < 1e-14 { *d } else { d / n }),
                }
            })
            .collect();
        LineMap {
            points,
            spacing: self.spacing,
        }
    }
}
