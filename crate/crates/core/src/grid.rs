//! Dense voxel orientation fields.
//!
//! File layout (little-endian): magic `HOGR`, dims as three `u32`, origin as
//! three `f32`, voxel size as `f32` (32 bytes), then the occupancy bitmap
//! (x fastest, LSB first, padded to a byte), then one `f16` direction triple
//! per occupied voxel in linear order.

use std::io::{Read, Write};
use std::path::Path;

use half::f16;
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line::canonical_sign;
use crate::Vec3;

pub const GRID_MAGIC: [u8; 4] = *b"HOGR";
pub const DEFAULT_GRID_DIMS: [usize; 3] = [512, 512, 384];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: [usize; 3],
    pub origin: [f64; 3],
    pub voxel_size: f64,
}

impl GridSpec {
    pub fn new(dims: [usize; 3], origin: Vec3, voxel_size: f64) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "grid dims must be positive: {dims:?}"
            )));
        }
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "voxel size must be positive, got {voxel_size}"
            )));
        }
        Ok(GridSpec {
            dims,
            origin: [origin.x, origin.y, origin.z],
            voxel_size,
        })
    }

    /// Default 512x512x384 grid whose extent is centered on `center`.
    pub fn centered(center: Vec3, voxel_size: f64) -> Result<Self> {
        let half = Vec3::new(
            DEFAULT_GRID_DIMS[0] as f64,
            DEFAULT_GRID_DIMS[1] as f64,
            DEFAULT_GRID_DIMS[2] as f64,
        ) * (voxel_size / 2.0);
        GridSpec::new(DEFAULT_GRID_DIMS, center - half, voxel_size)
    }

    /// Smallest grid of `voxel_size` covering `lo..hi` plus `margin` voxels.
    pub fn covering(lo: Vec3, hi: Vec3, voxel_size: f64, margin: usize) -> Result<Self> {
        let pad = voxel_size * margin as f64;
        let lo = lo - Vec3::repeat(pad);
        let extent = hi - lo + Vec3::repeat(pad);
        let dims = [
            ((extent.x / voxel_size).ceil() as usize).max(1),
            ((extent.y / voxel_size).ceil() as usize).max(1),
            ((extent.z / voxel_size).ceil() as usize).max(1),
        ];
        GridSpec::new(dims, lo, voxel_size)
    }

    pub fn origin(&self) -> Vec3 {
        Vec3::new(self.origin[0], self.origin[1], self.origin[2])
    }

    pub fn len(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear(&self, [i, j, k]: [usize; 3]) -> usize {
        (k * self.dims[1] + j) * self.dims[0] + i
    }

    pub fn unlinear(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    /// Continuous voxel coordinates: voxel `(i, j, k)` spans `[i, i+1)` etc.
    pub fn to_voxel_coords(&self, p: &Vec3) -> Vec3 {
        (p - self.origin()) / self.voxel_size
    }

    pub fn voxel_of(&self, p: &Vec3) -> Option<[usize; 3]> {
        let c = self.to_voxel_coords(p);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let f = c[a].floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            out[a] = f as usize;
        }
        Some(out)
    }

    pub fn center(&self, [i, j, k]: [usize; 3]) -> Vec3 {
        self.origin() + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5) * self.voxel_size
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        self.voxel_of(p).is_some()
    }

    pub fn voxel_diagonal(&self) -> f64 {
        self.voxel_size * 3f64.sqrt()
    }

    /// 6-connected neighbors inside the grid.
    pub fn neighbors6(&self, [i, j, k]: [usize; 3]) -> impl Iterator<Item = [usize; 3]> + '_ {
        const OFFSETS: [[i64; 3]; 6] = [
            [-1, 0, 0],
            [1, 0, 0],
            [0, -1, 0],
            [0, 1, 0],
            [0, 0, -1],
            [0, 0, 1],
        ];
        OFFSETS.iter().filter_map(move |o| {
            let n = [i as i64 + o[0], j as i64 + o[1], k as i64 + o[2]];
            (0..3)
                .all(|a| n[a] >= 0 && n[a] < self.dims[a] as i64)
                .then(|| [n[0] as usize, n[1] as usize, n[2] as usize])
        })
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self.dims == other.dims
            && (0..3).all(|a| {
                (self.origin[a] - other.origin[a]).abs() <= 1e-9 * self.voxel_size.max(1.0)
            })
            && (self.voxel_size - other.voxel_size).abs() <= 1e-12 * self.voxel_size.max(1.0)
    }
}

/// Occupancy plus a sign-ambiguous unit direction per occupied voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationGrid {
    spec: GridSpec,
    occupancy: Vec<bool>,
    directions: Vec<[f32; 3]>,
    exterior: Vec<bool>,
}

impl OrientationGrid {
    pub fn empty(spec: GridSpec) -> Self {
        let n = spec.len();
        OrientationGrid {
            spec,
            occupancy: vec![false; n],
            directions: vec![[0.0; 3]; n],
            exterior: vec![false; n],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn is_occupied(&self, idx: [usize; 3]) -> bool {
        self.occupancy[self.spec.linear(idx)]
    }

    pub fn is_occupied_linear(&self, i: usize) -> bool {
        self.occupancy[i]
    }

    pub fn is_exterior_linear(&self, i: usize) -> bool {
        self.exterior[i]
    }

    pub fn is_exterior(&self, idx: [usize; 3]) -> bool {
        self.exterior[self.spec.linear(idx)]
    }

    pub fn direction(&self, idx: [usize; 3]) -> Option<Vec3> {
        self.direction_linear(self.spec.linear(idx))
    }

    pub fn direction_linear(&self, i: usize) -> Option<Vec3> {
        self.occupancy[i].then(|| {
            let d = self.directions[i];
            Vec3::new(d[0] as f64, d[1] as f64, d[2] as f64)
        })
    }

    /// Marks a voxel occupied with a (normalized, canonicalized) direction.
    pub fn set(&mut self, idx: [usize; 3], direction: Vec3, exterior: bool) {
        let i = self.spec.linear(idx);
        self.set_linear(i, direction, exterior);
    }

    pub fn set_linear(&mut self, i: usize, direction: Vec3, exterior: bool) {
        let d = canonical_sign(direction.normalize());
        assert!(d.iter().all(|v| v.is_finite()), "direction must be nonzero");
        self.occupancy[i] = true;
        self.directions[i] = [d.x as f32, d.y as f32, d.z as f32];
        self.exterior[i] = exterior;
    }

    pub fn clear_linear(&mut self, i: usize) {
        self.occupancy[i] = false;
        self.directions[i] = [0.0; 3];
        self.exterior[i] = false;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    pub fn exterior_count(&self) -> usize {
        self.exterior.iter().filter(|o| **o).count()
    }

    pub fn occupied_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupancy
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.then_some(i))
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(32 + self.spec.len() / 8 + 1);
        buf.extend_from_slice(&GRID_MAGIC);
        for d in self.spec.dims {
            let d =
                u32::try_from(d).map_err(|_| Error::InvalidParameter("grid too large".into()))?;
            buf.extend_from_slice(&d.to_le_bytes());
        }
        for o in self.spec.origin {
            buf.extend_from_slice(&(o as f32).to_le_bytes());
        }
        buf.extend_from_slice(&(self.spec.voxel_size as f32).to_le_bytes());
        let mut bits = vec![0u8; self.spec.len().div_ceil(8)];
        for (i, o) in self.occupancy.iter().enumerate() {
            if *o {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        buf.extend_from_slice(&bits);
        for i in self.occupied_indices() {
            for c in self.directions[i] {
                buf.extend_from_slice(&f16::from_f32(c).to_le_bytes());
            }
        }
        w.write_all(&buf)?;
        Ok(())
    }

    /// Reads a grid; directions are renormalized after the f16 round trip.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() < 32 || bytes[0..4] != GRID_MAGIC {
            return Err(Error::MalformedHeader("missing HOGR grid header".into()));
        }
        let u = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
        let f = |i: usize| f32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as f64;
        let spec = GridSpec::new(
            [u(4), u(8), u(12)],
            Vector3::new(f(16), f(20), f(24)),
            f(28),
        )
        .map_err(|e| Error::MalformedHeader(e.to_string()))?;
        let n = spec.len();
        let bitmap_len = n.div_ceil(8);
        if bytes.len() < 32 + bitmap_len {
            return Err(Error::Truncated(format!(
                "grid bitmap needs {bitmap_len} bytes, have {}",
                bytes.len() - 32
            )));
        }
        let bits = &bytes[32..32 + bitmap_len];
        let mut grid = OrientationGrid::empty(spec);
        let occupied: Vec<usize> = (0..n)
            .filter(|i| bits[i / 8] & (1 << (i % 8)) != 0)
            .collect();
        let payload = &bytes[32 + bitmap_len..];
        if payload.len() < occupied.len() * 6 {
            return Err(Error::Truncated(format!(
                "grid directions need {} bytes, have {}",
                occupied.len() * 6,
                payload.len()
            )));
        }
        if payload.len() > occupied.len() * 6 {
            return Err(Error::DimensionMismatch {
                expected: format!("{} direction bytes", occupied.len() * 6),
                found: format!("{} bytes", payload.len()),
            });
        }
        for (slot, &i) in occupied.iter().enumerate() {
            let h = |c: usize| {
                let at = slot * 6 + c * 2;
                f16::from_le_bytes([payload[at], payload[at + 1]]).to_f64()
            };
            let d = Vec3::new(h(0), h(1), h(2));
            if !(d.norm() > 0.5) {
                return Err(Error::Validation(format!(
                    "voxel {i} stores a non-unit direction"
                )));
            }
            grid.set_linear(i, d, false);
        }
        Ok(grid)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::file(path, e))?;
        self.write_to(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::file(path, e))?;
        OrientationGrid::read_from(std::io::BufReader::new(file))
    }
}
