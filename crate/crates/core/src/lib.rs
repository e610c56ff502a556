//! Multi-view hair strand reconstruction.
//!
//! The pipeline turns calibrated 2D orientation maps and a noisy point cloud
//! into an oriented 3D line map, completes the hidden interior into a voxel
//! orientation field, traces segments through it and connects them into
//! scalp-rooted strands. A synthetic generator provides ground truth and the
//! precision/recall metrics used to score reconstructions.
//!
//! All world quantities are in millimeters and all angles in radians.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod camera;
pub mod error;
pub mod grid;
pub mod interior;
pub mod io;
pub mod line;
pub mod maps;
pub mod mvs;
pub mod orient2d;
pub mod pipeline;
pub mod pmvo;
pub mod scalp;
pub mod spatial;
pub mod strand;
pub mod strandgen;
pub mod strandmap;
pub mod synth;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Vec2 = nalgebra::Vector2<f64>;

pub use camera::{CameraView, Projection, Ray};
pub use error::{Error, Result};
pub use grid::{GridSpec, OrientationGrid};
pub use line::{LineMap, OrientedPoint};
pub use maps::{ConfidenceMap, DepthMap, GrayImage, OrientationMap};
pub use scalp::ScalpModel;
pub use strand::{Strand, StrandSet};
