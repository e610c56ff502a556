use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interior::{InteriorConfig, OpenShellPolicy};
use crate::orient2d::GaborParams;
use crate::pmvo::PmvoConfig;
use crate::strandgen::{ConnectConfig, TraceConfig};
use crate::strandmap::StrandMapConfig;
use crate::synth::EvalThreshold;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub work_dir: PathBuf,
    pub cameras: PathBuf,
    pub cloud: PathBuf,
    pub scalp: PathBuf,
    /// Precomputed `orientation_XX.hpx` / `confidence_XX.hpx` (orient mode `maps`).
    pub maps_dir: Option<PathBuf>,
    /// `view_XX.png` photographs (orient mode `gabor`).
    pub images_dir: Option<PathBuf>,
    /// Optional `mask_XX.png` hair masks for the gabor mode.
    pub masks_dir: Option<PathBuf>,
    /// Ground-truth strands; enables the eval stage.
    pub gt_strands: Option<PathBuf>,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            work_dir: "work".into(),
            cameras: "cameras.json".into(),
            cloud: "cloud.ply".into(),
            scalp: "scalp.ply".into(),
            maps_dir: None,
            images_dir: None,
            masks_dir: None,
            gt_strands: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OrientMode {
    #[default]
    Maps,
    Gabor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct OrientConfig {
    pub mode: OrientMode,
    pub gabor: GaborParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepthConfig {
    /// Square splat half-width used when rendering the cloud, pixels.
    pub splat_radius: usize,
}

impl Default for DepthConfig {
    fn default() -> Self {
        DepthConfig {
            splat_radius: crate::mvs::DEFAULT_SPLAT_RADIUS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrandMapStageConfig {
    pub enabled: bool,
    /// Rig camera distance from the line-map center, mm.
    pub rig_distance: f64,
    pub rig_focal: f64,
    pub grow_length: f64,
    pub sample_step: f64,
}

impl Default for StrandMapStageConfig {
    fn default() -> Self {
        let r = StrandMapConfig::default();
        StrandMapStageConfig {
            enabled: true,
            rig_distance: 600.0,
            rig_focal: 1000.0,
            grow_length: r.grow_length,
            sample_step: r.sample_step,
        }
    }
}

impl StrandMapStageConfig {
    pub fn render(&self) -> StrandMapConfig {
        StrandMapConfig {
            grow_length: self.grow_length,
            sample_step: self.sample_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GridLayout {
    /// Smallest grid covering the line map and the scalp.
    #[default]
    Covering,
    /// Fixed 512x512x384 grid centered on the line map.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InteriorStageConfig {
    pub voxel_size: f64,
    pub layout: GridLayout,
    /// Empty voxels added around a covering grid.
    pub margin: usize,
    pub closing_radius: usize,
    pub diffusion_sweeps: usize,
    pub seed_offset: f64,
    pub open_shell: OpenShellPolicy,
    /// Only interior voxels invisible in every view are merged.
    pub invisible_only: bool,
}

impl Default for InteriorStageConfig {
    fn default() -> Self {
        let c = InteriorConfig::default();
        InteriorStageConfig {
            voxel_size: 2.0,
            layout: GridLayout::Covering,
            margin: 4,
            closing_radius: c.closing_radius,
            diffusion_sweeps: c.diffusion_sweeps,
            seed_offset: c.seed_offset,
            open_shell: c.open_shell,
            invisible_only: true,
        }
    }
}

impl InteriorStageConfig {
    pub fn completion(&self) -> InteriorConfig {
        InteriorConfig {
            closing_radius: self.closing_radius,
            diffusion_sweeps: self.diffusion_sweeps,
            seed_offset: self.seed_offset,
            open_shell: self.open_shell,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct GrowConfig {
    pub trace: TraceConfig,
    pub connect: ConnectConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// `distance/angle` pairs in mm and degrees.
    pub thresholds: Vec<String>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            thresholds: EvalThreshold::defaults()
                .iter()
                .map(|t| t.to_string())
                .collect(),
        }
    }
}

impl EvalConfig {
    pub fn parsed(&self) -> Result<Vec<EvalThreshold>> {
        EvalThreshold::parse_list(&self.thresholds.join(","))
    }
}

/// The single config file driving a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub orient: OrientConfig,
    pub depth: DepthConfig,
    pub pmvo: PmvoConfig,
    pub strandmap: StrandMapStageConfig,
    pub interior: InteriorStageConfig,
    pub grow: GrowConfig,
    pub eval: EvalConfig,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a config file; relative paths are taken from its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        let mut cfg = PipelineConfig::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        p.work_dir = resolve(base, &p.work_dir);
        p.cameras = resolve(base, &p.cameras);
        p.cloud = resolve(base, &p.cloud);
        p.scalp = resolve(base, &p.scalp);
        for v in [
            &mut p.maps_dir,
            &mut p.images_dir,
            &mut p.masks_dir,
            &mut p.gt_strands,
        ]
        .into_iter()
        .flatten()
        {
            *v = resolve(base, v);
        }
    }

    /// Checks every referenced input and parameter before anything runs.
    pub fn validate(&self) -> Result<()> {
        let need = |what: &str, p: &Path| {
            if p.exists() {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "{what} '{}' does not exist",
                    p.display()
                )))
            }
        };
        let p = &self.paths;
        need("camera file", &p.cameras)?;
        need("point cloud", &p.cloud)?;
        need("scalp mesh", &p.scalp)?;
        match self.orient.mode {
            OrientMode::Maps => match &p.maps_dir {
                Some(d) => need("maps directory", d)?,
                None => {
                    return Err(Error::Validation(
                        "orient mode 'maps' needs paths.maps_dir".into(),
                    ))
                }
            },
            OrientMode::Gabor => match &p.images_dir {
                Some(d) => need("images directory", d)?,
                None => {
                    return Err(Error::Validation(
                        "orient mode 'gabor' needs paths.images_dir".into(),
                    ))
                }
            },
        }
        if let Some(d) = &p.masks_dir {
            need("masks directory", d)?;
        }
        if let Some(g) = &p.gt_strands {
            need("ground-truth strands", g)?;
        }
        crate::orient2d::build_bank(self.orient.gabor)?;
        self.pmvo.validate()?;
        let i = &self.interior;
        if !(i.voxel_size > 0.0 && i.voxel_size.is_finite()) {
            return Err(Error::Validation(format!(
                "interior.voxel_size must be positive, got {}",
                i.voxel_size
            )));
        }
        if !(self.strandmap.sample_step > 0.0 && self.strandmap.grow_length >= 0.0) {
            return Err(Error::Validation(
                "strandmap sample_step must be positive".into(),
            ));
        }
        if let Some(h) = self.grow.trace.step {
            if !(h > 0.0 && h <= i.voxel_size) {
                return Err(Error::Validation(format!(
                    "grow.trace.step must lie in (0, voxel_size], got {h}"
                )));
            }
        }
        let c = &self.grow.connect;
        for (name, v) in [
            ("chain_gap", c.chain_gap),
            ("chain_angle_deg", c.chain_angle_deg),
            ("root_distance", c.root_distance),
            ("sign_distance", c.sign_distance),
            ("graft_distance", c.graft_distance),
            ("bridge_step", c.bridge_step),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Validation(format!(
                    "grow.connect.{name} must be positive, got {v}"
                )));
            }
        }
        self.eval.parsed()?;
        Ok(())
    }
}
