//! Strand polylines and the little-endian strand binary format.
//!
//! Layout: `u32` strand count, then per strand a `u32` vertex count followed
//! by that many `f32` x, y, z triples. The `rooted` flag is not part of the
//! layout; loaded strands come back unrooted.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Strand {
    pub vertices: Vec<Vec3>,
    pub rooted: bool,
}

impl Strand {
    pub fn new(vertices: Vec<Vec3>, rooted: bool) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Validation(format!(
                "a strand needs at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        Ok(Strand { vertices, rooted })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn arc_length(&self) -> f64 {
        polyline_length(&self.vertices)
    }

    pub fn reversed(&self) -> Strand {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Strand {
            vertices,
            rooted: self.rooted,
        }
    }

    /// Largest gap between consecutive vertices.
    pub fn max_spacing(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .fold(0.0, f64::max)
    }
}

pub fn polyline_length(vertices: &[Vec3]) -> f64 {
    vertices.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
}

/// Resamples a polyline at uniform arc-length `spacing`, keeping both ends.
pub fn resample_polyline(vertices: &[Vec3], spacing: f64) -> Vec<Vec3> {
    assert!(spacing > 0.0);
    if vertices.len() < 2 {
        return vertices.to_vec();
    }
    let total = polyline_length(vertices);
    if total == 0.0 {
        return vec![vertices[0]];
    }
    let n = (total / spacing).ceil().max(1.0) as usize;
    let step = total / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(vertices[0]);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for k in 1..n {
        let target = k as f64 * step;
        loop {
            let len = (vertices[seg + 1] - vertices[seg]).norm();
            if seg_start + len >= target || seg + 2 == vertices.len() {
                let t = if len > 0.0 {
                    ((target - seg_start) / len).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                out.push(vertices[seg] + (vertices[seg + 1] - vertices[seg]) * t);
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    out.push(*vertices.last().unwrap());
    out
}

/// Unit tangent at each vertex from central differences (one-sided at the ends).
pub fn polyline_tangents(vertices: &[Vec3]) -> Vec<Vec3> {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let a = vertices[i.saturating_sub(1)];
            let b = vertices[(i + 1).min(n - 1)];
            (b - a).try_normalize(1e-12).unwrap_or_else(Vec3::zeros)
        })
        .collect()
}

/// Inserts vertices so that no gap between `from` and `to` exceeds `step`.
/// Returns the interior points only.
pub fn bridge(from: &Vec3, to: &Vec3, step: f64) -> Vec<Vec3> {
    let gap = (to - from).norm();
    let n = (gap / step).ceil() as usize;
    (1..n)
        .map(|k| from + (to - from) * (k as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StrandSet {
    pub strands: Vec<Strand>,
}

impl StrandSet {
    pub fn new(strands: Vec<Strand>) -> Self {
        StrandSet { strands }
    }

    pub fn len(&self) -> usize {
        self.strands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strands.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.strands.iter().map(Strand::len).sum()
    }

    pub fn rooted_count(&self) -> usize {
        self.strands.iter().filter(|s| s.rooted).count()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let count = u32::try_from(self.strands.len())
            .map_err(|_| Error::InvalidParameter("too many strands".into()))?;
        let mut buf = Vec::with_capacity(4 + self.vertex_count() * 12 + self.len() * 4);
        buf.extend_from_slice(&count.to_le_bytes());
        for s in &self.strands {
            let n = u32::try_from(s.vertices.len())
                .map_err(|_| Error::InvalidParameter("strand too long".into()))?;
            buf.extend_from_slice(&n.to_le_bytes());
            for v in &s.vertices {
                for c in v.iter() {
                    buf.extend_from_slice(&(*c as f32).to_le_bytes());
                }
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 4 {
            return Err(Error::MalformedHeader(
                "strand file shorter than its 4-byte count".into(),
            ));
        }
        let count = u32::from_le_bytes(bytes[0..4].try_into().unwrap()) as usize;
        let mut pos = 4;
        let mut strands = Vec::with_capacity(count.min(1 << 20));
        for index in 0..count {
            if pos + 4 > bytes.len() {
                return Err(Error::TruncatedStrand { index, expected: 0 });
            }
            let n = u32::from_le_bytes(bytes[pos..pos + 4].try_into().unwrap());
            pos += 4;
            let need = n as usize * 12;
            if pos + need > bytes.len() {
                return Err(Error::TruncatedStrand { index, expected: n });
            }
            let vertices = bytes[pos..pos + need]
                .chunks_exact(12)
                .map(|c| {
                    let f = |i: usize| f32::from_le_bytes(c[i..i + 4].try_into().unwrap()) as f64;
                    Vec3::new(f(0), f(4), f(8))
                })
                .collect();
            pos += need;
            strands.push(Strand {
                vertices,
                rooted: false,
            });
        }
        if pos != bytes.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{pos} bytes for {count} strands"),
                found: format!("{} bytes", bytes.len()),
            });
        }
        Ok(StrandSet { strands })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        StrandSet::read_from(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_strands() -> StrandSet {
        StrandSet::new(vec![
            Strand::new(
                vec![Vec3::new(0.5, 1.25, -3.0), Vec3::new(0.75, 1.5, -2.0)],
                true,
            )
            .unwrap(),
            Strand::new(
                vec![
                    Vec3::new(10.0, 0.0, 0.0),
                    Vec3::new(10.0, 0.125, 0.0),
                    Vec3::new(10.0, 0.25, 0.0),
                ],
                false,
            )
            .unwrap(),
        ])
    }

    #[test]
    fn round_trip_is_bitwise() {
        let set = two_strands();
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 4 + (4 + 24) + (4 + 36));
        let back = StrandSet::read_from(&buf[..]).unwrap();
        for (a, b) in set.strands.iter().zip(&back.strands) {
            for (u, v) in a.vertices.iter().zip(&b.vertices) {
                for k in 0..3 {
                    assert_eq!((u[k] as f32).to_bits(), (v[k] as f32).to_bits());
                }
            }
        }
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncation_names_strand_index() {
        let mut buf = Vec::new();
        two_strands().write_to(&mut buf).unwrap();
        buf.truncate(buf.len() - 5);
        match StrandSet::read_from(&buf[..]) {
            Err(Error::TruncatedStrand { index, expected }) => {
                assert_eq!(index, 1);
                assert_eq!(expected, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            StrandSet::read_from(&buf[..2]),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn resample_keeps_ends_and_spacing() {
        let line = vec![
            Vec3::zeros(),
            Vec3::new(3.5, 0.0, 0.0),
            Vec3::new(3.5, 2.0, 0.0),
        ];
        let r = resample_polyline(&line, 1.0);
        assert_eq!(r.first(), Some(&Vec3::zeros()));
        assert_eq!(r.last(), Some(&Vec3::new(3.5, 2.0, 0.0)));
        assert_eq!(r.len(), 7);
        for w in r.windows(2) {
            assert!((w[1] - w[0]).norm() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn bridge_limits_gap() {
        let pts = bridge(&Vec3::zeros(), &Vec3::new(2.5, 0.0, 0.0), 1.0);
        assert_eq!(pts.len(), 2);
        assert!((pts[0].x - 2.5 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn short_strand_rejected() {
        assert!(Strand::new(vec![Vec3::zeros()], false).is_err());
    }
}
