//! File formats.

pub mod cameras;
pub mod image;
pub mod ply;
pub mod raster;

pub use cameras::{load_cameras, save_cameras};
pub use ply::{
    load_line_map, load_point_cloud, load_scalp, save_line_map, save_point_cloud, save_scalp,
    PointCloud,
};
pub use raster::PixelRaster;
