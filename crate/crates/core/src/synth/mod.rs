//! Synthetic ground truth: parametric hairstyles, analytic maps, noise
//! injection and the point-wise precision/recall metric.

mod eval;
mod hairstyle;
mod noise;
mod render;
mod scene;

pub use eval::{evaluate, EvalReport, EvalSamples, EvalThreshold, ThresholdScore, EVAL_SPACING};
pub use hairstyle::{gen_hairstyle, gen_hairstyle_with, HairstyleParams, Style};
pub use noise::{inject_noise, noise_count, sample_cloud};
pub use render::render_gt_maps;
pub use scene::{
    build_scene, camera_rings, confidence_file, load_scene_maps, orientation_file, strand_bounds,
    SceneConfig, SyntheticScene, CAMERAS_FILE, CLOUD_FILE, GT_STRANDS_FILE, SCALP_FILE, SCENE_FILE,
};
