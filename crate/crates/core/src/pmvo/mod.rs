//! Patch-based multi-view optimization of an oriented line map.
//!
//! Each candidate point gets the 3D line direction whose projections best
//! agree with the observed 2D orientation maps, searched over the 1-DOF
//! family of directions consistent with a reference view's 2D orientation.
//! Poorly fitting points are dropped and the survivors are smoothed against
//! their spatial neighbors.

mod loss;
mod optimize;
mod refine;

use serde::{Deserialize, Serialize};

use crate::camera::CameraView;
use crate::error::{Error, Result};
use crate::maps::{ConfidenceMap, DepthMap, OrientationMap};

pub use loss::{multiview_cost, patch_angular_loss, PatchLoss};
pub use optimize::{
    admissible_plane, filter_lines, keep_line, optimize_all, optimize_line, ray_distance,
    AdmissiblePlane, LineFit,
};
pub use refine::{refine_lines, refine_once, RefineStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmvoConfig {
    /// Side of the square patch, pixels (odd).
    pub patch_size: usize,
    /// Points are kept when `L_opt` is strictly below this.
    pub keep_threshold: f64,
    pub neighbor_count: usize,
    /// Directions are replaced when `1 - |cos|` to the neighbor mean is
    /// strictly above this.
    pub variance_threshold: f64,
    pub reference_count: usize,
    /// Visibility slack, mm.
    pub tau: f64,
    pub angular_samples: usize,
    pub refine_iterations: usize,
    /// Offset along the line used to project its 2D direction, mm.
    pub projection_offset: f64,
    /// Pixels with confidence below this are ignored in patches and as
    /// reference frames.
    pub confidence_floor: f64,
    /// Final golden-section resolution, degrees.
    pub search_tolerance_deg: f64,
    /// Kept points need a weighted contribution from at least this many views.
    pub min_support_views: usize,
    /// Minimum spacing of the output line map, mm.
    pub sample_spacing: f64,
}

impl Default for PmvoConfig {
    fn default() -> Self {
        PmvoConfig {
            patch_size: 5,
            keep_threshold: 0.05,
            neighbor_count: 100,
            variance_threshold: 0.015,
            reference_count: 10,
            tau: 5.0,
            angular_samples: 64,
            refine_iterations: 1,
            projection_offset: 1.0,
            confidence_floor: 1e-3,
            search_tolerance_deg: 0.1,
            min_support_views: 5,
            sample_spacing: crate::line::DEFAULT_SAMPLE_SPACING,
        }
    }
}

impl PmvoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.patch_size % 2 == 0 {
            return bad(format!("patch size must be odd, got {}", self.patch_size));
        }
        for (name, v) in [
            ("keep_threshold", self.keep_threshold),
            ("variance_threshold", self.variance_threshold),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {v}"));
            }
        }
        if self.reference_count == 0 {
            return bad("reference_count must be at least 1".into());
        }
        if self.angular_samples < 2 {
            return bad("angular_samples must be at least 2".into());
        }
        for (name, v) in [
            ("tau", self.tau),
            ("projection_offset", self.projection_offset),
            ("search_tolerance_deg", self.search_tolerance_deg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !(self.sample_spacing >= 0.0) || !(self.confidence_floor >= 0.0) {
            return bad("sample_spacing and confidence_floor must be non-negative".into());
        }
        Ok(())
    }
}

/// One calibrated view with its orientation, confidence and depth maps.
#[derive(Debug, Clone)]
pub struct ObservedView {
    pub camera: CameraView,
    pub orientation: OrientationMap,
    pub confidence: ConfidenceMap,
    pub depth: DepthMap,
}

impl ObservedView {
    pub fn new(
        camera: CameraView,
        orientation: OrientationMap,
        confidence: ConfidenceMap,
        depth: DepthMap,
    ) -> Result<Self> {
        let dims = (camera.width, camera.height);
        for (name, d) in [
            ("orientation", (orientation.width(), orientation.height())),
            ("confidence", (confidence.width(), confidence.height())),
            ("depth", (depth.width(), depth.height())),
        ] {
            if d != dims {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{} to match the camera", dims.0, dims.1),
                    found: format!("{name} map of {}x{}", d.0, d.1),
                });
            }
        }
        Ok(ObservedView {
            camera,
            orientation,
            confidence,
            depth,
        })
    }
}
