//! Camera sets as JSON: `{"views": [{fx, fy, cx, cy, world_to_camera, width, height}, ...]}`.

use std::path::Path;

use crate::camera::{CameraRecord, CameraSetRecord, CameraView};
use crate::error::{Error, Result};

pub fn cameras_from_json(text: &str) -> Result<Vec<CameraView>> {
    let set: CameraSetRecord = serde_json::from_str(text)?;
    set.views
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            CameraView::try_from(rec).map_err(|e| match e {
                Error::Validation(msg) => Error::Validation(format!("camera {i}: {msg}")),
                other => other,
            })
        })
        .collect()
}

pub fn cameras_to_json(views: &[CameraView]) -> Result<String> {
    let set = CameraSetRecord {
        views: views
            .iter()
            .enumerate()
            .map(|(i, v)| CameraRecord {
                name: Some(format!("view_{i:02}")),
                ..CameraRecord::from(v)
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&set)?)
}

pub fn load_cameras(path: impl AsRef<Path>) -> Result<Vec<CameraView>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let views = cameras_from_json(&text)?;
    if views.is_empty() {
        return Err(Error::Validation(format!(
            "{} lists no views",
            path.display()
        )));
    }
    Ok(views)
}

pub fn save_cameras(views: &[CameraView], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, cameras_to_json(views)?).map_err(|e| Error::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;

    #[test]
    fn round_trip() {
        let views = vec![CameraView::look_at(
            Vec3::new(0.0, -600.0, 100.0),
            Vec3::zeros(),
            Vec3::z(),
            700.0,
            710.0,
            320.0,
            256.0,
            640,
            512,
        )
        .unwrap()];
        let back = cameras_from_json(&cameras_to_json(&views).unwrap()).unwrap();
        assert_eq!(back.len(), 1);
        assert!((back[0].rotation() - views[0].rotation()).abs().max() < 1e-12);
        assert_eq!(back[0].fy, 710.0);
    }

    #[test]
    fn non_orthonormal_matrix_is_validation_error() {
        let text = r#"{"views":[{"fx":1.0,"fy":1.0,"cx":0.0,"cy":0.0,
            "world_to_camera":[1.1,0,0,0, 0,1,0,0, 0,0,1,0, 0,0,0,1],
            "width":4,"height":4}]}"#;
        let err = cameras_from_json(text).unwrap_err();
        assert!(err.is_validation(), "{err}");
    }
}
