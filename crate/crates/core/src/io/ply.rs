//! PLY point clouds, line maps and scalp meshes.
//!
//! Point clouds use a `vertex` element with `x y z` and optional `nx ny nz`;
//! for line maps the normal slot carries the line direction. Scalp meshes add
//! a `face` element (`vertex_indices`) and a `root` element with `x y z`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ply_rs::parser::Parser;
use ply_rs::ply::{
    Addable, DefaultElement, ElementDef, Encoding, Ply, Property, PropertyDef, PropertyType,
    ScalarType,
};
use ply_rs::writer::Writer;

use crate::error::{Error, Result};
use crate::line::{LineMap, OrientedPoint};
use crate::scalp::ScalpModel;
use crate::Vec3;

/// Positions with optional per-point directions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub positions: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(positions: Vec<Vec3>) -> Self {
        PointCloud {
            positions,
            normals: None,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn from_line_map(map: &LineMap) -> Self {
        PointCloud {
            positions: map.positions(),
            normals: Some(map.points().iter().map(|p| p.direction()).collect()),
        }
    }

    /// Interprets the normals as line directions. Points with a zero normal
    /// are rejected.
    pub fn to_line_map(&self, spacing: f64) -> Result<LineMap> {
        let normals = self.normals.as_ref().ok_or_else(|| {
            Error::Validation("point cloud carries no nx/ny/nz directions".into())
        })?;
        let pts = self
            .positions
            .iter()
            .zip(normals)
            .map(|(p, n)| OrientedPoint::new(*p, *n))
            .collect::<Result<Vec<_>>>()?;
        Ok(LineMap::with_spacing(pts, spacing))
    }
}

fn float_prop(name: &str) -> PropertyDef {
    PropertyDef::new(name.to_string(), PropertyType::Scalar(ScalarType::Float))
}

fn xyz_element(name: &str, with_normals: bool) -> ElementDef {
    let mut e = ElementDef::new(name.to_string());
    for p in ["x", "y", "z"] {
        e.properties.add(float_prop(p));
    }
    if with_normals {
        for p in ["nx", "ny", "nz"] {
            e.properties.add(float_prop(p));
        }
    }
    e
}

fn xyz_row(p: &Vec3, n: Option<&Vec3>) -> DefaultElement {
    let mut row = DefaultElement::new();
    for (k, v) in ["x", "y", "z"].iter().zip(p.iter()) {
        row.insert(k.to_string(), Property::Float(*v as f32));
    }
    if let Some(n) = n {
        for (k, v) in ["nx", "ny", "nz"].iter().zip(n.iter()) {
            row.insert(k.to_string(), Property::Float(*v as f32));
        }
    }
    row
}

fn scalar(row: &DefaultElement, key: &str) -> Option<f64> {
    Some(match row.get(key)? {
        Property::Char(v) => *v as f64,
        Property::UChar(v) => *v as f64,
        Property::Short(v) => *v as f64,
        Property::UShort(v) => *v as f64,
        Property::Int(v) => *v as f64,
        Property::UInt(v) => *v as f64,
        Property::Float(v) => *v as f64,
        Property::Double(v) => *v,
        _ => return None,
    })
}

fn read_xyz(row: &DefaultElement, keys: [&str; 3], element: &str, i: usize) -> Result<Vec3> {
    let mut out = [0.0; 3];
    for (o, k) in out.iter_mut().zip(keys) {
        *o = scalar(row, k)
            .ok_or_else(|| Error::Ply(format!("{element} {i} lacks numeric property {k}")))?;
    }
    Ok(Vec3::from(out))
}

fn indices(row: &DefaultElement, i: usize) -> Result<Vec<u32>> {
    let list = row
        .get("vertex_indices")
        .or_else(|| row.get("vertex_index"))
        .ok_or_else(|| Error::Ply(format!("face {i} lacks vertex_indices")))?;
    let out: Vec<i64> = match list {
        Property::ListChar(v) => v.iter().map(|x| *x as i64).collect(),
        Property::ListUChar(v) => v.iter().map(|x| *x as i64).collect(),
        Property::ListShort(v) => v.iter().map(|x| *x as i64).collect(),
        Property::ListUShort(v) => v.iter().map(|x| *x as i64).collect(),
        Property::ListInt(v) => v.iter().map(|x| *x as i64).collect(),
        Property::ListUInt(v) => v.iter().map(|x| *x as i64).collect(),
        _ => return Err(Error::Ply(format!("face {i} has non-integer indices"))),
    };
    out.into_iter()
        .map(|x| u32::try_from(x).map_err(|_| Error::Ply(format!("face {i} has index {x}"))))
        .collect()
}

fn write_ply<W: Write>(mut ply: Ply<DefaultElement>, binary: bool, mut w: W) -> Result<()> {
    ply.header.encoding = if binary {
        Encoding::BinaryLittleEndian
    } else {
        Encoding::Ascii
    };
    ply.make_consistent()
        .map_err(|e| Error::Ply(format!("inconsistent ply: {e:?}")))?;
    Writer::new().write_ply(&mut w, &mut ply)?;
    w.flush()?;
    Ok(())
}

fn parse<R: BufRead>(mut r: R) -> Result<Ply<DefaultElement>> {
    Parser::<DefaultElement>::new()
        .read_ply(&mut r)
        .map_err(|e| Error::Ply(e.to_string()))
}

pub fn write_point_cloud<W: Write>(cloud: &PointCloud, binary: bool, w: W) -> Result<()> {
    if let Some(n) = &cloud.normals {
        if n.len() != cloud.positions.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} normals", cloud.positions.len()),
                found: format!("{}", n.len()),
            });
        }
    }
    let mut ply = Ply::<DefaultElement>::new();
    ply.header
        .elements
        .add(xyz_element("vertex", cloud.normals.is_some()));
    let rows = cloud
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| xyz_row(p, cloud.normals.as_ref().map(|n| &n[i])))
        .collect();
    ply.payload.insert("vertex".into(), rows);
    write_ply(ply, binary, w)
}

pub fn read_point_cloud<R: BufRead>(r: R) -> Result<PointCloud> {
    let ply = parse(r)?;
    let rows = ply
        .payload
        .get("vertex")
        .ok_or_else(|| Error::Ply("no vertex element".into()))?;
    let has_normals = ply
        .header
        .elements
        .get("vertex")
        .map(|e| {
            ["nx", "ny", "nz"]
                .iter()
                .all(|k| e.properties.contains_key(*k))
        })
        .unwrap_or(false);
    let mut positions = Vec::with_capacity(rows.len());
    let mut normals = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        positions.push(read_xyz(row, ["x", "y", "z"], "vertex", i)?);
        if has_normals {
            normals.push(read_xyz(row, ["nx", "ny", "nz"], "vertex", i)?);
        }
    }
    Ok(PointCloud {
        positions,
        normals: has_normals.then_some(normals),
    })
}

pub fn save_point_cloud(cloud: &PointCloud, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::file(path, e))?;
    write_point_cloud(cloud, binary, BufWriter::new(f))
}

pub fn load_point_cloud(path: impl AsRef<Path>) -> Result<PointCloud> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::file(path, e))?;
    read_point_cloud(BufReader::new(f))
}

pub fn save_line_map(map: &LineMap, path: impl AsRef<Path>, binary: bool) -> Result<()> {
    save_point_cloud(&PointCloud::from_line_map(map), path, binary)
}

pub fn load_line_map(path: impl AsRef<Path>, spacing: f64) -> Result<LineMap> {
    load_point_cloud(path)?.to_line_map(spacing)
}

/// Scalp meshes are always written as ASCII: the binary writer of the
/// underlying PLY crate emits wrong list lengths. Binary files still load.
pub fn write_scalp<W: Write>(scalp: &ScalpModel, w: W) -> Result<()> {
    let mut ply = Ply::<DefaultElement>::new();
    ply.header.elements.add(xyz_element("vertex", false));
    let mut face = ElementDef::new("face".into());
    face.properties.add(PropertyDef::new(
        "vertex_indices".into(),
        PropertyType::List(ScalarType::UChar, ScalarType::UInt),
    ));
    ply.header.elements.add(face);
    ply.header.elements.add(xyz_element("root", false));
    ply.payload.insert(
        "vertex".into(),
        scalp.vertices().iter().map(|p| xyz_row(p, None)).collect(),
    );
    ply.payload.insert(
        "face".into(),
        scalp
            .faces()
            .iter()
            .map(|f| {
                let mut row = DefaultElement::new();
                row.insert("vertex_indices".into(), Property::ListUInt(f.to_vec()));
                row
            })
            .collect(),
    );
    ply.payload.insert(
        "root".into(),
        scalp.roots().iter().map(|p| xyz_row(p, None)).collect(),
    );
    write_ply(ply, false, w)
}

/// Reads a scalp mesh. Polygons with more than three corners are fanned.
/// Root sites are re-validated against the mesh after the f32 round trip,
/// so they are snapped onto it first.
pub fn read_scalp<R: BufRead>(r: R) -> Result<ScalpModel> {
    let ply = parse(r)?;
    let empty = Vec::new();
    let vrows = ply
        .payload
        .get("vertex")
        .ok_or_else(|| Error::Ply("no vertex element".into()))?;
    let vertices = vrows
        .iter()
        .enumerate()
        .map(|(i, row)| read_xyz(row, ["x", "y", "z"], "vertex", i))
        .collect::<Result<Vec<_>>>()?;
    let mut faces = Vec::new();
    for (i, row) in ply.payload.get("face").unwrap_or(&empty).iter().enumerate() {
        let idx = indices(row, i)?;
        if idx.len() < 3 {
            return Err(Error::Ply(format!("face {i} has {} corners", idx.len())));
        }
        for k in 1..idx.len() - 1 {
            faces.push([idx[0], idx[k], idx[k + 1]]);
        }
    }
    let raw_roots = ply
        .payload
        .get("root")
        .unwrap_or(&empty)
        .iter()
        .enumerate()
        .map(|(i, row)| read_xyz(row, ["x", "y", "z"], "root", i))
        .collect::<Result<Vec<_>>>()?;
    let mesh = ScalpModel::new(vertices, faces, Vec::new())?;
    let roots = raw_roots
        .iter()
        .map(|r| {
            let hit = mesh.closest_point(r);
            if hit.distance > 1e-3 {
                Err(Error::Validation(format!(
                    "root site {r:?} lies {:.3} mm off the scalp mesh",
                    hit.distance
                )))
            } else {
                Ok(hit.point)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    mesh.with_roots(roots)
}

pub fn save_scalp(scalp: &ScalpModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::file(path, e))?;
    write_scalp(scalp, BufWriter::new(f))
}

pub fn load_scalp(path: impl AsRef<Path>) -> Result<ScalpModel> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::file(path, e))?;
    read_scalp(BufReader::new(f))
}
