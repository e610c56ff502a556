//! Undirectional strand maps rendered from a line map into a fixed rig.
//!
//! Orientation `O` is stored doubled as `(cos 2O, sin 2O)`, which makes `O`
//! and `O + pi` the same value.

use rayon::prelude::*;

use crate::camera::CameraView;
use crate::error::{Error, Result};
use crate::io::raster::PixelRaster;
use crate::line::LineMap;
use crate::maps::{wrap_orientation, DepthMap};
use crate::{Vec2, Vec3};

pub const RIG_VIEW_COUNT: usize = 16;
pub const RIG_WIDTH: u32 = 1280;
pub const RIG_HEIGHT: u32 = 720;

pub fn encode_undirectional(angle: f64) -> Vec2 {
    let (s, c) = (2.0 * angle).sin_cos();
    Vec2::new(c, s)
}

/// Inverse of [`encode_undirectional`], into `[0, pi)`.
pub fn decode_undirectional(u: &Vec2) -> f64 {
    wrap_orientation(0.5 * u.y.atan2(u.x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct UndirectionalStrandMap {
    width: u32,
    height: u32,
    values: Vec<[f32; 2]>,
    mask: Vec<bool>,
}

impl UndirectionalStrandMap {
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        UndirectionalStrandMap {
            width,
            height,
            values: vec![[0.0; 2]; n],
            mask: vec![false; n],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> Option<Vec2> {
        let i = y * self.width as usize + x;
        self.mask[i].then(|| Vec2::new(self.values[i][0] as f64, self.values[i][1] as f64))
    }

    fn set(&mut self, i: usize, angle: f64) {
        let u = encode_undirectional(angle);
        self.values[i] = [u.x as f32, u.y as f32];
        self.mask[i] = true;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    /// Two-channel raster; unmasked pixels are `(0, 0)`.
    pub fn to_raster(&self) -> PixelRaster {
        let data = self.values.iter().flat_map(|v| *v).collect();
        PixelRaster::new(self.width, self.height, 2, data).expect("consistent strand map")
    }

    /// 8-bit RGB preview: red and green carry `(u + 1) / 2`, blue marks hair.
    pub fn save_png(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        let path = path.as_ref();
        let to8 = |v: f32| ((v as f64 + 1.0) * 127.5).round().clamp(0.0, 255.0) as u8;
        let bytes: Vec<u8> = self
            .values
            .iter()
            .zip(&self.mask)
            .flat_map(|(v, m)| {
                if *m {
                    [to8(v[0]), to8(v[1]), 255]
                } else {
                    [0, 0, 0]
                }
            })
            .collect();
        image::RgbImage::from_raw(self.width, self.height, bytes)
            .expect("buffer matches dimensions")
            .save(path)
            .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
    }

    pub fn from_raster(r: &PixelRaster) -> Result<Self> {
        r.expect_channels(2)?;
        let values: Vec<[f32; 2]> = r.data().chunks_exact(2).map(|c| [c[0], c[1]]).collect();
        let mask = values.iter().map(|v| v[0] != 0.0 || v[1] != 0.0).collect();
        Ok(UndirectionalStrandMap {
            width: r.width(),
            height: r.height(),
            values,
            mask,
        })
    }
}

/// Sixteen synthetic views around a head: twelve on the horizon every 30
/// degrees of azimuth and four at 35 degrees elevation every 90 degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedViewRig {
    views: Vec<CameraView>,
}

impl FixedViewRig {
    pub fn standard(center: Vec3, radius: f64, focal: f64) -> Self {
        let mut views = Vec::with_capacity(RIG_VIEW_COUNT);
        let mut add = |elev_deg: f64, azim_deg: f64| {
            let (e, a) = (elev_deg.to_radians(), azim_deg.to_radians());
            let eye = center + radius * Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin());
            views.push(
                CameraView::look_at(
                    eye,
                    center,
                    Vec3::z(),
                    focal,
                    focal,
                    (RIG_WIDTH as f64 - 1.0) / 2.0,
                    (RIG_HEIGHT as f64 - 1.0) / 2.0,
                    RIG_WIDTH,
                    RIG_HEIGHT,
                )
                .expect("rig poses are valid"),
            );
        };
        for k in 0..12 {
            add(0.0, 30.0 * k as f64);
        }
        for k in 0..4 {
            add(35.0, 90.0 * k as f64);
        }
        FixedViewRig { views }
    }

    /// A rig from an explicit camera list, which must hold 16 views.
    pub fn from_views(views: Vec<CameraView>) -> Result<Self> {
        if views.len() != RIG_VIEW_COUNT {
            return Err(Error::Validation(format!(
                "a strand-map rig has {RIG_VIEW_COUNT} views, got {}",
                views.len()
            )));
        }
        Ok(FixedViewRig { views })
    }

    pub fn views(&self) -> &[CameraView] {
        &self.views
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrandMapConfig {
    /// Each line point is extended this far along its direction, mm.
    pub grow_length: f64,
    /// Sample step along the grown segment, mm.
    pub sample_step: f64,
}

impl Default for StrandMapConfig {
    fn default() -> Self {
        StrandMapConfig {
            grow_length: 2.0,
            sample_step: 0.25,
        }
    }
}

/// Renders one view: every line point is grown into a short segment that is
/// sampled, projected and depth-tested; the nearest sample owns its pixel.
pub fn render_view(
    map: &LineMap,
    view: &CameraView,
    cfg: &StrandMapConfig,
) -> (UndirectionalStrandMap, DepthMap) {
    let (w, h) = (view.width, view.height);
    let mut depth = DepthMap::empty(w, h);
    let mut angles = vec![f64::NAN; w as usize * h as usize];
    let n = (cfg.grow_length / cfg.sample_step).round().max(0.0) as i64;
    for pt in map.points() {
        let d = pt.direction();
        for k in -n..=n {
            let q = pt.position + d * (k as f64 * cfg.sample_step);
            let Some(pr) = view.project(&q) else { continue };
            let Some((x, y)) = view.pixel_of(&pr.uv) else {
                continue;
            };
            let Some(tip) = view.project(&(q + d)) else {
                continue;
            };
            let Some(l) = (tip.uv - pr.uv).try_normalize(1e-12) else {
                continue;
            };
            let angle = wrap_orientation(l.y.atan2(l.x));
            let i = y * w as usize + x;
            let cur = depth.get(x, y);
            if pr.z < cur || (pr.z == cur && angle < angles[i]) {
                depth.splat_min(x, y, pr.z);
                angles[i] = angle;
            }
        }
    }
    let mut out = UndirectionalStrandMap::empty(w, h);
    for (i, a) in angles.iter().enumerate() {
        if a.is_finite() {
            out.set(i, *a);
        }
    }
    (out, depth)
}

/// Renders every rig view in parallel.
pub fn render_strand_maps(
    map: &LineMap,
    views: &[CameraView],
    cfg: &StrandMapConfig,
) -> Vec<(UndirectionalStrandMap, DepthMap)> {
    views.par_iter().map(|v| render_view(map, v, cfg)).collect()
}
