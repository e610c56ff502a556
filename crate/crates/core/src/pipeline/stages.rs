//! Each stage reads its inputs from disk and writes its outputs to disk, so a
//! cached stage and a freshly run one hand identical data downstream.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use crate::camera::CameraView;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, OrientationGrid};
use crate::interior::{complete_interior, splat_line_map};
use crate::io::{self, PixelRaster, PointCloud};
use crate::line::LineMap;
use crate::maps::{ConfidenceMap, DepthMap, OrientationMap};
use crate::mvs::{classify_interior, render_depth};
use crate::orient2d::{build_bank, extract_orientation};
use crate::pmvo::{filter_lines, keep_line, optimize_all, refine_lines, ObservedView, PmvoConfig};
use crate::scalp::ScalpModel;
use crate::strand::StrandSet;
use crate::strandgen::{connect_strands, merge_geometry, stratified_seeds, trace_segments};
use crate::strandmap::{render_strand_maps, FixedViewRig};
use crate::synth::{
    confidence_file, evaluate, orientation_file, EvalReport, EvalSamples, EvalThreshold,
};
use crate::Vec3;

use super::config::{
    GridLayout, GrowConfig, InteriorStageConfig, OrientConfig, OrientMode, StrandMapStageConfig,
};

pub type Counts = BTreeMap<String, f64>;

pub fn image_file(view: usize) -> String {
    format!("view_{view:02}.png")
}

pub fn mask_file(view: usize) -> String {
    format!("mask_{view:02}.png")
}

pub fn depth_file(view: usize) -> String {
    format!("depth_{view:02}.hpx")
}

pub fn strand_map_file(view: usize) -> String {
    format!("strandmap_{view:02}.hpx")
}

pub fn strand_map_preview_file(view: usize) -> String {
    format!("strandmap_{view:02}.png")
}

pub fn strand_depth_file(view: usize) -> String {
    format!("strandmap_depth_{view:02}.hpx")
}

pub(crate) fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

fn counts<const N: usize>(items: [(&str, f64); N]) -> Counts {
    items.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn load_maps(dir: &Path, views: usize) -> Result<Vec<(OrientationMap, ConfidenceMap)>> {
    (0..views)
        .into_par_iter()
        .map(|i| {
            let o =
                OrientationMap::from_raster(&PixelRaster::load(dir.join(orientation_file(i)))?)?;
            let c = ConfidenceMap::from_raster(&PixelRaster::load(dir.join(confidence_file(i)))?)?;
            Ok((o, c))
        })
        .collect()
}

pub fn load_depths(dir: &Path, views: usize) -> Result<Vec<DepthMap>> {
    (0..views)
        .into_par_iter()
        .map(|i| DepthMap::from_raster(&PixelRaster::load(dir.join(depth_file(i)))?))
        .collect()
}

/// Orientation and confidence per view, either copied from precomputed maps
/// or extracted from photographs with the Gabor bank.
pub fn extract_orient(
    cfg: &OrientConfig,
    cameras: &[CameraView],
    source_dir: &Path,
    masks_dir: Option<&Path>,
    out_dir: &Path,
) -> Result<Counts> {
    ensure_dir(out_dir)?;
    let maps: Vec<(OrientationMap, ConfidenceMap)> = match cfg.mode {
        OrientMode::Maps => load_maps(source_dir, cameras.len())?,
        OrientMode::Gabor => {
            let bank = build_bank(cfg.gabor)?;
            (0..cameras.len())
                .map(|i| {
                    let img = io::image::load_gray(source_dir.join(image_file(i)))?;
                    let mask = match masks_dir {
                        Some(d) => {
                            let (w, h, m) = io::image::load_mask(d.join(mask_file(i)))?;
                            if (w, h) != (img.width, img.height) {
                                return Err(Error::DimensionMismatch {
                                    expected: format!("{}x{} mask", img.width, img.height),
                                    found: format!("{w}x{h}"),
                                });
                            }
                            m
                        }
                        None => vec![true; img.data.len()],
                    };
                    extract_orientation(&img, &bank, &mask)
                })
                .collect::<Result<_>>()?
        }
    };
    let mut masked = 0usize;
    for (i, ((o, c), cam)) in maps.iter().zip(cameras).enumerate() {
        if (o.width(), o.height()) != (cam.width, cam.height) {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} for view {i}", cam.width, cam.height),
                found: format!("{}x{}", o.width(), o.height()),
            });
        }
        masked += o.masked_count();
        o.to_raster().save(out_dir.join(orientation_file(i)))?;
        c.to_raster().save(out_dir.join(confidence_file(i)))?;
    }
    Ok(counts([
        ("views", maps.len() as f64),
        ("masked_pixels", masked as f64),
    ]))
}

pub fn render_depths(
    cameras: &[CameraView],
    cloud: &[Vec3],
    splat_radius: usize,
    out_dir: &Path,
) -> Result<Counts> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput("point cloud"));
    }
    ensure_dir(out_dir)?;
    let depths: Vec<DepthMap> = cameras
        .par_iter()
        .map(|c| render_depth(c, cloud, splat_radius))
        .collect();
    let mut finite = 0usize;
    for (i, d) in depths.iter().enumerate() {
        finite += d.finite_count();
        d.to_raster().save(out_dir.join(depth_file(i)))?;
    }
    Ok(counts([
        ("views", depths.len() as f64),
        ("covered_pixels", finite as f64),
    ]))
}

/// Optimizes, filters and refines a line per cloud point.
pub fn run_pmvo(
    cfg: &PmvoConfig,
    cameras: &[CameraView],
    maps_dir: &Path,
    depth_dir: &Path,
    cloud: &[Vec3],
    out_line_map: &Path,
) -> Result<Counts> {
    cfg.validate()?;
    let maps = load_maps(maps_dir, cameras.len())?;
    let depths = load_depths(depth_dir, cameras.len())?;
    let views = cameras
        .iter()
        .zip(maps)
        .zip(depths)
        .map(|((c, (o, k)), d)| ObservedView::new(c.clone(), o, k, d))
        .collect::<Result<Vec<_>>>()?;
    let fits = optimize_all(cloud, &views, cfg);
    let optimized = fits.iter().flatten().count();
    let kept = fits.iter().flatten().filter(|f| keep_line(f, cfg)).count();
    let map = refine_lines(&filter_lines(&fits, cfg), cfg);
    if map.is_empty() {
        return Err(Error::EmptyInput(
            "line map (no point passed the cost filter)",
        ));
    }
    io::save_line_map(&map, out_line_map, true)?;
    Ok(counts([
        ("cloud_points", cloud.len() as f64),
        ("optimized", optimized as f64),
        ("kept", kept as f64),
        ("line_points", map.len() as f64),
    ]))
}

pub fn line_map_bounds(map: &LineMap) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for p in map.points() {
        lo = lo.inf(&p.position);
        hi = hi.sup(&p.position);
    }
    (lo, hi)
}

pub fn render_rig_maps(
    cfg: &StrandMapStageConfig,
    map: &LineMap,
    out_dir: &Path,
) -> Result<Counts> {
    if map.is_empty() {
        return Err(Error::EmptyInput("line map"));
    }
    ensure_dir(out_dir)?;
    let (lo, hi) = line_map_bounds(map);
    let rig = FixedViewRig::standard((lo + hi) / 2.0, cfg.rig_distance, cfg.rig_focal);
    io::save_cameras(rig.views(), out_dir.join("rig.json"))?;
    let rendered = render_strand_maps(map, rig.views(), &cfg.render());
    let mut masked = 0usize;
    for (i, (m, d)) in rendered.iter().enumerate() {
        masked += m.masked_count();
        m.to_raster().save(out_dir.join(strand_map_file(i)))?;
        d.to_raster().save(out_dir.join(strand_depth_file(i)))?;
        m.save_png(out_dir.join(strand_map_preview_file(i)))?;
    }
    Ok(counts([
        ("views", rendered.len() as f64),
        ("masked_pixels", masked as f64),
    ]))
}

pub fn grid_for(cfg: &InteriorStageConfig, map: &LineMap, scalp: &ScalpModel) -> Result<GridSpec> {
    let (lo, hi) = line_map_bounds(map);
    match cfg.layout {
        GridLayout::Covering => {
            let (slo, shi) = scalp.bounds();
            GridSpec::covering(lo.inf(&slo), hi.sup(&shi), cfg.voxel_size, cfg.margin)
        }
        GridLayout::Fixed => GridSpec::centered((lo + hi) / 2.0, cfg.voxel_size),
    }
}

/// Completes the hidden interior; writes the completed grid.
pub fn run_interior(
    cfg: &InteriorStageConfig,
    map: &LineMap,
    scalp: &ScalpModel,
    out_grid: &Path,
) -> Result<Counts> {
    let spec = grid_for(cfg, map, scalp)?;
    let res = complete_interior(map, scalp, &spec, &cfg.completion())?;
    res.grid.save(out_grid)?;
    Ok(counts([
        ("occupied_voxels", res.grid.occupied_count() as f64),
        ("exterior_voxels", res.grid.exterior_count() as f64),
        ("diffusion_sweeps", res.sweep_changes.len() as f64),
        ("open_holes", res.open_holes.map_or(0, |h| h.len()) as f64),
    ]))
}

/// Visibility data used to keep only interior voxels no view can see.
pub struct VisibilitySource<'a> {
    pub cameras: &'a [CameraView],
    pub depths: Vec<DepthMap>,
    pub tau: f64,
}

/// Merges exterior and interior geometry, traces segments and connects them.
pub fn run_grow(
    cfg: &GrowConfig,
    interior: &OrientationGrid,
    exterior: Option<&LineMap>,
    scalp: &ScalpModel,
    visibility: Option<VisibilitySource<'_>>,
    out_strands: &Path,
) -> Result<Counts> {
    let spec = *interior.spec();
    let ext = match exterior {
        Some(m) => splat_line_map(m, &spec),
        None => OrientationGrid::empty(spec),
    };
    let tau = visibility
        .as_ref()
        .map_or(crate::mvs::DEFAULT_TAU, |v| v.tau);
    let views: Option<Vec<(CameraView, DepthMap)>> =
        visibility.map(|v| v.cameras.iter().cloned().zip(v.depths).collect());
    let grid = match &views {
        Some(vs) => {
            let pred = |p: &Vec3| classify_interior(p, vs, tau);
            merge_geometry(&ext, interior, Some(&pred))?
        }
        None => merge_geometry(&ext, interior, None)?,
    };
    if grid.occupied_count() == 0 {
        return Err(Error::EmptyInput("orientation grid"));
    }
    let seeds = stratified_seeds(&grid, cfg.trace.seed_stride);
    let segments = trace_segments(&grid, &seeds, &cfg.trace);
    if segments.is_empty() {
        return Err(Error::EmptyInput("traced segments"));
    }
    let mut connect = cfg.connect;
    if let Some(h) = cfg.trace.step {
        connect.bridge_step = connect.bridge_step.min(h);
    }
    let res = connect_strands(&segments, scalp, &connect);
    res.strands.save(out_strands)?;
    Ok(counts([
        ("grid_voxels", grid.occupied_count() as f64),
        ("seeds", seeds.len() as f64),
        ("segments", segments.len() as f64),
        ("long_strands", res.long_strands as f64),
        ("rooted", res.rooted as f64),
        ("unrooted", res.unrooted as f64),
        ("vertices", res.strands.vertex_count() as f64),
    ]))
}

/// Prediction input for evaluation: a strand file or a line-map PLY.
pub fn load_eval_samples(path: &Path) -> Result<EvalSamples> {
    let is_ply = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ply"));
    if is_ply {
        Ok(EvalSamples::from_line_map(&io::load_line_map(path, 0.0)?))
    } else {
        Ok(EvalSamples::from_strands(&StrandSet::load(path)?))
    }
}

pub fn run_eval(
    pred: &Path,
    gt: &Path,
    thresholds: &[EvalThreshold],
    report: &Path,
) -> Result<EvalReport> {
    let pred = load_eval_samples(pred)?;
    let gt = EvalSamples::from_strands(&StrandSet::load(gt)?);
    let r = evaluate(&pred, &gt, thresholds)?;
    let text = serde_json::to_string_pretty(&r)?;
    std::fs::write(report, text).map_err(|e| Error::file(report, e))?;
    Ok(r)
}

pub fn load_cloud(path: &Path) -> Result<Vec<Vec3>> {
    Ok(io::load_point_cloud(path)?.positions)
}

pub fn save_cloud(points: &[Vec3], path: &Path) -> Result<()> {
    io::save_point_cloud(&PointCloud::new(points.to_vec()), path, true)
}
