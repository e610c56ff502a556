use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::camera::CameraView;
use crate::error::{Error, Result};
use crate::io::{self, PixelRaster, PointCloud};
use crate::maps::{ConfidenceMap, OrientationMap};
use crate::scalp::ScalpModel;
use crate::strand::StrandSet;
use crate::Vec3;

use super::hairstyle::{gen_hairstyle_with, HairstyleParams, Style};
use super::noise::{inject_noise, sample_cloud};
use super::render::render_gt_maps;

pub const CAMERAS_FILE: &str = "cameras.json";
pub const CLOUD_FILE: &str = "cloud.ply";
pub const SCALP_FILE: &str = "scalp.ply";
pub const GT_STRANDS_FILE: &str = "gt_strands.bin";
pub const SCENE_FILE: &str = "scene.json";

pub fn orientation_file(view: usize) -> String {
    format!("orientation_{view:02}.hpx")
}

pub fn confidence_file(view: usize) -> String {
    format!("confidence_{view:02}.hpx")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub style: Style,
    pub strands: usize,
    pub seed: u64,
    pub noise_fraction: f64,
    /// Spacing of the clean cloud along each strand, mm.
    pub cloud_spacing: f64,
    /// Camera rings as `(elevation, azimuth offset)`, degrees.
    pub rings: Vec<(f64, f64)>,
    pub views_per_ring: usize,
    pub camera_distance: f64,
    pub width: u32,
    pub height: u32,
    pub focal: f64,
    /// Disc radius used to draw strands into the maps, pixels.
    pub line_radius: usize,
    pub hairstyle: HairstyleParams,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            style: Style::Wavy,
            strands: 50,
            seed: 7,
            noise_fraction: 0.3,
            cloud_spacing: 0.5,
            rings: vec![(-15.0, 0.0), (15.0, 22.5), (45.0, 0.0)],
            views_per_ring: 8,
            camera_distance: 600.0,
            width: 960,
            height: 768,
            focal: 750.0,
            line_radius: 1,
            hairstyle: HairstyleParams::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub config: SceneConfig,
    pub strands: StrandSet,
    pub scalp: ScalpModel,
    pub cameras: Vec<CameraView>,
    pub maps: Vec<(OrientationMap, ConfidenceMap)>,
    /// Clean strand samples followed by the injected noise.
    pub cloud: Vec<Vec3>,
    pub clean_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SceneInfo {
    clean_points: usize,
    noise_points: usize,
    views: usize,
}

pub fn strand_bounds(set: &StrandSet) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in set.strands.iter().flat_map(|s| &s.vertices) {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (lo, hi)
}

/// Rings of cameras on a sphere around `target`, all looking at it.
pub fn camera_rings(target: Vec3, cfg: &SceneConfig) -> Result<Vec<CameraView>> {
    let mut views = Vec::new();
    for &(elev, offset) in &cfg.rings {
        for k in 0..cfg.views_per_ring {
            let e = elev.to_radians();
            let a = (offset + 360.0 * k as f64 / cfg.views_per_ring as f64).to_radians();
            let eye = target
                + cfg.camera_distance * Vec3::new(e.cos() * a.cos(), e.cos() * a.sin(), e.sin());
            views.push(CameraView::look_at(
                eye,
                target,
                Vec3::z(),
                cfg.focal,
                cfg.focal,
                (cfg.width as f64 - 1.0) / 2.0,
                (cfg.height as f64 - 1.0) / 2.0,
                cfg.width,
                cfg.height,
            )?);
        }
    }
    Ok(views)
}

/// Generates a hairstyle, its camera rig, analytic maps and a noisy cloud.
pub fn build_scene(cfg: &SceneConfig) -> Result<SyntheticScene> {
    if cfg.views_per_ring == 0 || cfg.rings.is_empty() {
        return Err(Error::InvalidParameter(
            "a scene needs at least one camera".into(),
        ));
    }
    let (strands, scalp) = gen_hairstyle_with(cfg.style, cfg.strands, cfg.seed, &cfg.hairstyle)?;
    let (lo, hi) = strand_bounds(&strands);
    let cameras = camera_rings((lo + hi) / 2.0, cfg)?;
    let maps = cameras
        .par_iter()
        .map(|v| {
            let (o, c, _) = render_gt_maps(&strands, v, cfg.line_radius);
            (o, c)
        })
        .collect();
    let clean = sample_cloud(&strands, cfg.cloud_spacing);
    let clean_points = clean.len();
    let cloud = inject_noise(
        &clean,
        cfg.noise_fraction,
        (lo, hi),
        cfg.seed.wrapping_add(1),
    )?;
    Ok(SyntheticScene {
        config: cfg.clone(),
        strands,
        scalp,
        cameras,
        maps,
        cloud,
        clean_points,
    })
}

impl SyntheticScene {
    pub fn is_noise(&self, i: usize) -> bool {
        i >= self.clean_points
    }

    /// Writes cameras, maps, cloud, scalp and ground truth into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::File {
            path: dir.to_path_buf(),
            source: e,
        })?;
        io::save_cameras(&self.cameras, dir.join(CAMERAS_FILE))?;
        for (i, (o, c)) in self.maps.iter().enumerate() {
            o.to_raster().save(dir.join(orientation_file(i)))?;
            c.to_raster().save(dir.join(confidence_file(i)))?;
        }
        io::save_point_cloud(
            &PointCloud::new(self.cloud.clone()),
            dir.join(CLOUD_FILE),
            true,
        )?;
        io::save_scalp(&self.scalp, dir.join(SCALP_FILE))?;
        self.strands.save(dir.join(GT_STRANDS_FILE))?;
        let info = SceneInfo {
            clean_points: self.clean_points,
            noise_points: self.cloud.len() - self.clean_points,
            views: self.cameras.len(),
        };
        let text = serde_json::to_string_pretty(
            &serde_json::json!({ "config": self.config, "info": info }),
        )?;
        std::fs::write(dir.join(SCENE_FILE), text).map_err(|e| Error::File {
            path: dir.join(SCENE_FILE),
            source: e,
        })
    }
}

/// Loads the orientation and confidence maps written by [`SyntheticScene::write`].
pub fn load_scene_maps(
    dir: impl AsRef<Path>,
    views: usize,
) -> Result<Vec<(OrientationMap, ConfidenceMap)>> {
    let dir = dir.as_ref();
    (0..views)
        .map(|i| {
            let o =
                OrientationMap::from_raster(&PixelRaster::load(dir.join(orientation_file(i)))?)?;
            let c = ConfidenceMap::from_raster(&PixelRaster::load(dir.join(confidence_file(i)))?)?;
            Ok((o, c))
        })
        .collect()
}
