#![allow(dead_code)]

use hairline::mvs::render_depth;
use hairline::pmvo::ObservedView;
use hairline::synth::{build_scene, SceneConfig, SyntheticScene};

pub fn small_scene(strands: usize, noise: f64) -> SyntheticScene {
    build_scene(&SceneConfig {
        strands,
        noise_fraction: noise,
        ..SceneConfig::default()
    })
    .unwrap()
}

pub fn observed_views(scene: &SyntheticScene) -> Vec<ObservedView> {
    scene
        .cameras
        .iter()
        .zip(&scene.maps)
        .map(|(c, (o, k))| {
            ObservedView::new(
                c.clone(),
                o.clone(),
                k.clone(),
                render_depth(c, &scene.cloud, 1),
            )
            .unwrap()
        })
        .collect()
}
