//! Config-driven end-to-end run with per-stage caching and a summary report.
//!
//! Stages run in a fixed order and communicate only through files in the
//! work directory. A stage is reused on resume when its marker records the
//! same fingerprint (its config section chained with all upstream
//! fingerprints) and its outputs still exist.

mod config;
mod stages;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::OrientationGrid;
use crate::io;
use crate::synth::EvalReport;

pub use config::{
    DepthConfig, EvalConfig, GridLayout, GrowConfig, InteriorStageConfig, OrientConfig, OrientMode,
    PathsConfig, PipelineConfig, StrandMapStageConfig,
};
pub use stages::{
    depth_file, extract_orient, grid_for, image_file, line_map_bounds, load_cloud, load_depths,
    load_eval_samples, mask_file, render_depths, render_rig_maps, run_eval, run_grow, run_interior,
    run_pmvo, save_cloud, strand_depth_file, strand_map_file, strand_map_preview_file, Counts,
    VisibilitySource,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    ExtractOrient,
    RenderDepth,
    Pmvo,
    RenderStrandmaps,
    Interior,
    Grow,
    Eval,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::ExtractOrient,
        Stage::RenderDepth,
        Stage::Pmvo,
        Stage::RenderStrandmaps,
        Stage::Interior,
        Stage::Grow,
        Stage::Eval,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::ExtractOrient => "extract-orient",
            Stage::RenderDepth => "render-depth",
            Stage::Pmvo => "pmvo",
            Stage::RenderStrandmaps => "render-strandmaps",
            Stage::Interior => "interior",
            Stage::Grow => "grow",
            Stage::Eval => "eval",
        }
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown stage '{s}'")))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Validation(#[source] Error),
    #[error("stage '{stage}' failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Error,
    },
}

impl PipelineError {
    /// Process exit code: 1 for validation, 2 for a stage failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) => 1,
            PipelineError::Stage { .. } => 2,
        }
    }
}

/// File locations inside the work directory.
#[derive(Debug, Clone)]
pub struct WorkLayout {
    pub root: PathBuf,
}

impl WorkLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        WorkLayout { root: root.into() }
    }

    pub fn orient_dir(&self) -> PathBuf {
        self.root.join("orient")
    }

    pub fn depth_dir(&self) -> PathBuf {
        self.root.join("depth")
    }

    pub fn line_map(&self) -> PathBuf {
        self.root.join("line_map.ply")
    }

    pub fn strandmap_dir(&self) -> PathBuf {
        self.root.join("strandmaps")
    }

    pub fn interior_grid(&self) -> PathBuf {
        self.root.join("interior.grid")
    }

    pub fn strands(&self) -> PathBuf {
        self.root.join("strands.bin")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }

    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.json")
    }

    fn marker(&self, stage: Stage) -> PathBuf {
        self.root
            .join(".stages")
            .join(format!("{}.json", stage.name()))
    }

    /// What must exist for a cached stage to be reused.
    fn outputs(&self, stage: Stage) -> Vec<PathBuf> {
        match stage {
            Stage::ExtractOrient => vec![self.orient_dir()],
            Stage::RenderDepth => vec![self.depth_dir()],
            Stage::Pmvo => vec![self.line_map()],
            Stage::RenderStrandmaps => vec![self.strandmap_dir()],
            Stage::Interior => vec![self.interior_grid()],
            Stage::Grow => vec![self.strands()],
            Stage::Eval => vec![self.report()],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reuse stages whose cached outputs match the current config.
    pub resume: bool,
    /// Stop once this stage has completed.
    pub stop_after: Option<Stage>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ran,
    Cached,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub seconds: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub stages: Vec<StageRecord>,
    pub total_seconds: f64,
    pub eval: Option<EvalReport>,
}

impl RunSummary {
    pub fn record(&self, stage: Stage) -> Option<&StageRecord> {
        self.stages.iter().find(|r| r.stage == stage)
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
struct Marker {
    fingerprint: String,
    counts: Counts,
}

fn fingerprint(stage: Stage, cfg: &PipelineConfig, upstream: &str) -> String {
    let section = match stage {
        Stage::ExtractOrient => serde_json::json!([
            cfg.orient,
            cfg.paths.maps_dir,
            cfg.paths.images_dir,
            cfg.paths.masks_dir,
            cfg.paths.cameras
        ]),
        Stage::RenderDepth => serde_json::json!([cfg.depth, cfg.paths.cloud, cfg.paths.cameras]),
        Stage::Pmvo => serde_json::json!(cfg.pmvo),
        Stage::RenderStrandmaps => serde_json::json!(cfg.strandmap),
        Stage::Interior => serde_json::json!([cfg.interior, cfg.paths.scalp]),
        Stage::Grow => serde_json::json!([cfg.grow, cfg.interior.invisible_only, cfg.pmvo.tau]),
        Stage::Eval => serde_json::json!([cfg.eval, cfg.paths.gt_strands]),
    };
    format!("{}:{}|{}", stage.name(), section, upstream)
}

fn read_marker(path: &Path) -> Option<Marker> {
    let text = std::fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

fn write_marker(path: &Path, m: &Marker) -> Result<()> {
    stages::ensure_dir(path.parent().expect("marker has a parent"))?;
    std::fs::write(path, serde_json::to_string_pretty(m)?).map_err(|e| Error::file(path, e))
}

struct Runner<'a> {
    cfg: &'a PipelineConfig,
    layout: WorkLayout,
}

impl Runner<'_> {
    fn execute(&self, stage: Stage) -> Result<Counts> {
        let cfg = self.cfg;
        let l = &self.layout;
        let p = &cfg.paths;
        match stage {
            Stage::ExtractOrient => {
                let cams = io::load_cameras(&p.cameras)?;
                let src = match cfg.orient.mode {
                    OrientMode::Maps => p.maps_dir.as_ref(),
                    OrientMode::Gabor => p.images_dir.as_ref(),
                }
                .expect("validated");
                extract_orient(
                    &cfg.orient,
                    &cams,
                    src,
                    p.masks_dir.as_deref(),
                    &l.orient_dir(),
                )
            }
            Stage::RenderDepth => {
                let cams = io::load_cameras(&p.cameras)?;
                render_depths(
                    &cams,
                    &load_cloud(&p.cloud)?,
                    cfg.depth.splat_radius,
                    &l.depth_dir(),
                )
            }
            Stage::Pmvo => {
                let cams = io::load_cameras(&p.cameras)?;
                let cloud = load_cloud(&p.cloud)?;
                run_pmvo(
                    &cfg.pmvo,
                    &cams,
                    &l.orient_dir(),
                    &l.depth_dir(),
                    &cloud,
                    &l.line_map(),
                )
            }
            Stage::RenderStrandmaps => {
                let map = io::load_line_map(l.line_map(), 0.0)?;
                render_rig_maps(&cfg.strandmap, &map, &l.strandmap_dir())
            }
            Stage::Interior => {
                let map = io::load_line_map(l.line_map(), 0.0)?;
                let scalp = io::load_scalp(&p.scalp)?;
                run_interior(&cfg.interior, &map, &scalp, &l.interior_grid())
            }
            Stage::Grow => {
                let map = io::load_line_map(l.line_map(), 0.0)?;
                let scalp = io::load_scalp(&p.scalp)?;
                let grid = OrientationGrid::load(l.interior_grid())?;
                let cams = io::load_cameras(&p.cameras)?;
                let vis = if cfg.interior.invisible_only {
                    Some(VisibilitySource {
                        cameras: &cams,
                        depths: load_depths(&l.depth_dir(), cams.len())?,
                        tau: cfg.pmvo.tau,
                    })
                } else {
                    None
                };
                run_grow(&cfg.grow, &grid, Some(&map), &scalp, vis, &l.strands())
            }
            Stage::Eval => {
                let gt = p
                    .gt_strands
                    .as_ref()
                    .expect("eval only runs with ground truth");
                let thresholds = cfg.eval.parsed()?;
                let r = run_eval(&l.strands(), gt, &thresholds, &l.report())?;
                let mut c = Counts::new();
                c.insert("pred_points".into(), r.pred_points as f64);
                c.insert("gt_points".into(), r.gt_points as f64);
                for s in &r.scores {
                    c.insert(format!("f_score@{}", s.threshold), s.f_score);
                }
                Ok(c)
            }
        }
    }
}

/// Runs every stage in order; see the module docs for caching.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    opts: &RunOptions,
) -> std::result::Result<RunSummary, PipelineError> {
    cfg.validate().map_err(PipelineError::Validation)?;
    let layout = WorkLayout::new(&cfg.paths.work_dir);
    stages::ensure_dir(&layout.root).map_err(PipelineError::Validation)?;
    let runner = Runner {
        cfg,
        layout: layout.clone(),
    };
    let start = Instant::now();
    let mut records = Vec::new();
    let mut upstream = String::new();
    for stage in Stage::ALL {
        let skip = match stage {
            Stage::RenderStrandmaps => !cfg.strandmap.enabled,
            Stage::Eval => cfg.paths.gt_strands.is_none(),
            _ => false,
        };
        let fp = fingerprint(stage, cfg, &upstream);
        if stage != Stage::RenderStrandmaps && stage != Stage::Eval {
            upstream = fp.clone();
        }
        if skip {
            records.push(StageRecord {
                stage,
                status: StageStatus::Skipped,
                seconds: 0.0,
                counts: Counts::new(),
            });
        } else {
            let marker_path = layout.marker(stage);
            let cached = opts
                .resume
                .then(|| read_marker(&marker_path))
                .flatten()
                .filter(|m| {
                    m.fingerprint == fp && layout.outputs(stage).iter().all(|o| o.exists())
                });
            let t = Instant::now();
            let (status, counts) = match cached {
                Some(m) => {
                    log::info!("{stage}: reusing cached outputs");
                    (StageStatus::Cached, m.counts)
                }
                None => {
                    log::info!("{stage}: running");
                    let _ = std::fs::remove_file(&marker_path);
                    let counts = runner
                        .execute(stage)
                        .map_err(|source| PipelineError::Stage { stage, source })?;
                    write_marker(
                        &marker_path,
                        &Marker {
                            fingerprint: fp,
                            counts: counts.clone(),
                        },
                    )
                    .map_err(|source| PipelineError::Stage { stage, source })?;
                    (StageStatus::Ran, counts)
                }
            };
            records.push(StageRecord {
                stage,
                status,
                seconds: t.elapsed().as_secs_f64(),
                counts,
            });
        }
        if opts.stop_after == Some(stage) {
            break;
        }
    }
    let eval = if records
        .iter()
        .any(|r| r.stage == Stage::Eval && r.status != StageStatus::Skipped)
    {
        let text = std::fs::read_to_string(layout.report()).map_err(|e| PipelineError::Stage {
            stage: Stage::Eval,
            source: Error::file(layout.report(), e),
        })?;
        Some(
            serde_json::from_str(&text).map_err(|e| PipelineError::Stage {
                stage: Stage::Eval,
                source: e.into(),
            })?,
        )
    } else {
        None
    };
    let summary = RunSummary {
        stages: records,
        total_seconds: start.elapsed().as_secs_f64(),
        eval,
    };
    let text =
        serde_json::to_string_pretty(&summary).map_err(|e| PipelineError::Validation(e.into()))?;
    std::fs::write(layout.summary(), text)
        .map_err(|e| PipelineError::Validation(Error::file(layout.summary(), e)))?;
    Ok(summary)
}

/// Config for a scene written by [`crate::synth::SyntheticScene::write`],
/// with paths relative to the scene directory.
pub fn scene_config() -> PipelineConfig {
    use crate::synth::{CAMERAS_FILE, CLOUD_FILE, GT_STRANDS_FILE, SCALP_FILE};
    let mut cfg = PipelineConfig {
        paths: PathsConfig {
            work_dir: "work".into(),
            cameras: CAMERAS_FILE.into(),
            cloud: CLOUD_FILE.into(),
            scalp: SCALP_FILE.into(),
            maps_dir: Some(".".into()),
            images_dir: None,
            masks_dir: None,
            gt_strands: Some(GT_STRANDS_FILE.into()),
        },
        ..PipelineConfig::default()
    };
    cfg.pmvo.neighbor_count = 16;
    cfg.interior.open_shell = crate::interior::OpenShellPolicy::ExteriorOnly;
    cfg
}
