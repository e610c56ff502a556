//! Per-view pixel fields: orientation, confidence and depth.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::io::raster::PixelRaster;

/// Value written to unmasked orientation pixels in raster files.
pub const ORIENTATION_SENTINEL: f32 = -1.0;

fn check_len(width: u32, height: u32, len: usize, what: &str) -> Result<()> {
    let expected = width as usize * height as usize;
    if expected != len {
        return Err(Error::DimensionMismatch {
            expected: format!("{what} of {width}x{height} = {expected} pixels"),
            found: format!("{len} values"),
        });
    }
    Ok(())
}

/// Wraps any angle into `[0, pi)`.
pub fn wrap_orientation(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI {
        0.0
    } else {
        a
    }
}

/// 2D hair direction per pixel, in radians from the image x-axis, modulo pi.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationMap {
    width: u32,
    height: u32,
    angles: Vec<f32>,
    mask: Vec<bool>,
}

impl OrientationMap {
    /// An entirely unmasked map.
    pub fn empty(width: u32, height: u32) -> Self {
        let n = width as usize * height as usize;
        OrientationMap {
            width,
            height,
            angles: vec![ORIENTATION_SENTINEL; n],
            mask: vec![false; n],
        }
    }

    /// Builds a map from raw angles. Masked angles are wrapped into `[0, pi)`.
    pub fn new(width: u32, height: u32, angles: Vec<f32>, mask: Vec<bool>) -> Result<Self> {
        check_len(width, height, angles.len(), "orientation angles")?;
        check_len(width, height, mask.len(), "orientation mask")?;
        let mut map = OrientationMap {
            width,
            height,
            angles,
            mask,
        };
        for i in 0..map.angles.len() {
            if map.mask[i] {
                let a = map.angles[i] as f64;
                if !a.is_finite() {
                    return Err(Error::Validation(format!(
                        "non-finite masked orientation at pixel {i}"
                    )));
                }
                map.angles[i] = wrap_orientation(a) as f32;
                if map.angles[i] as f64 >= PI {
                    map.angles[i] = 0.0;
                }
            } else {
                map.angles[i] = ORIENTATION_SENTINEL;
            }
        }
        Ok(map)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    fn index(&self, x: usize, y: usize) -> usize {
        y * self.width as usize + x
    }

    /// Orientation at a pixel, or `None` outside the mask or the image.
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        if x >= self.width as usize || y >= self.height as usize {
            return None;
        }
        let i = self.index(x, y);
        self.mask[i].then(|| self.angles[i] as f64)
    }

    pub fn set(&mut self, x: usize, y: usize, angle: f64) {
        let i = self.index(x, y);
        self.angles[i] = wrap_orientation(angle) as f32;
        self.mask[i] = true;
    }

    pub fn clear(&mut self, x: usize, y: usize) {
        let i = self.index(x, y);
        self.angles[i] = ORIENTATION_SENTINEL;
        self.mask[i] = false;
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn angles(&self) -> &[f32] {
        &self.angles
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn to_raster(&self) -> PixelRaster {
        PixelRaster::new(self.width, self.height, 1, self.angles.clone())
            .expect("orientation map dimensions are consistent")
    }

    pub fn from_raster(raster: &PixelRaster) -> Result<Self> {
        raster.expect_channels(1)?;
        let mask: Vec<bool> = raster.data().iter().map(|v| *v >= 0.0).collect();
        OrientationMap::new(
            raster.width(),
            raster.height(),
            raster.data().to_vec(),
            mask,
        )
    }
}

/// Non-negative per-pixel confidence of the orientation estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMap {
    width: u32,
    height: u32,
    values: Vec<f32>,
}

impl ConfidenceMap {
    pub fn zeros(width: u32, height: u32) -> Self {
        ConfidenceMap {
            width,
            height,
            values: vec![0.0; width as usize * height as usize],
        }
    }

    pub fn new(width: u32, height: u32, values: Vec<f32>) -> Result<Self> {
        check_len(width, height, values.len(), "confidence values")?;
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Validation(format!(
                "confidence at pixel {i} is {} (must be finite and >= 0)",
                values[i]
            )));
        }
        Ok(ConfidenceMap {
            width,
            height,
            values,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        if x >= self.width as usize || y >= self.height as usize {
            return 0.0;
        }
        self.values[y * self.width as usize + x] as f64
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        assert!(value.is_finite() && value >= 0.0);
        let w = self.width as usize;
        self.values[y * w + x] = value as f32;
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Multiplies every value by `factor` (> 0).
    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor > 0.0);
        ConfidenceMap {
            width: self.width,
            height: self.height,
            values: self
                .values
                .iter()
                .map(|v| (*v as f64 * factor) as f32)
                .collect(),
        }
    }

    pub fn to_raster(&self) -> PixelRaster {
        PixelRaster::new(self.width, self.height, 1, self.values.clone())
            .expect("confidence map dimensions are consistent")
    }

    pub fn from_raster(raster: &PixelRaster) -> Result<Self> {
        raster.expect_channels(1)?;
        ConfidenceMap::new(raster.width(), raster.height(), raster.data().to_vec())
    }
}

/// Camera-space depth in mm; `+inf` where nothing projects.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    depths: Vec<f32>,
}

impl DepthMap {
    pub fn empty(width: u32, height: u32) -> Self {
        DepthMap {
            width,
            height,
            depths: vec![f32::INFINITY; width as usize * height as usize],
        }
    }

    pub fn new(width: u32, height: u32, depths: Vec<f32>) -> Result<Self> {
        check_len(width, height, depths.len(), "depths")?;
        if let Some(i) = depths
            .iter()
            .position(|d| d.is_nan() || (d.is_finite() && *d <= 0.0) || *d == f32::NEG_INFINITY)
        {
            return Err(Error::Validation(format!(
                "depth at pixel {i} is {} (must be > 0 or +inf)",
                depths[i]
            )));
        }
        Ok(DepthMap {
            width,
            height,
            depths,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        if x >= self.width as usize || y >= self.height as usize {
            return f64::INFINITY;
        }
        self.depths[y * self.width as usize + x] as f64
    }

    /// Keeps the smaller of the stored and offered depth.
    pub fn splat_min(&mut self, x: usize, y: usize, z: f64) {
        let i = y * self.width as usize + x;
        let z = z as f32;
        if z < self.depths[i] {
            self.depths[i] = z;
        }
    }

    pub fn depths(&self) -> &[f32] {
        &self.depths
    }

    pub fn finite_count(&self) -> usize {
        self.depths.iter().filter(|d| d.is_finite()).count()
    }

    pub fn to_raster(&self) -> PixelRaster {
        PixelRaster::new(self.width, self.height, 1, self.depths.clone())
            .expect("depth map dimensions are consistent")
    }

    pub fn from_raster(raster: &PixelRaster) -> Result<Self> {
        raster.expect_channels(1)?;
        DepthMap::new(raster.width(), raster.height(), raster.data().to_vec())
    }
}

/// Single-channel luminance image in `[0, 1]`-ish floating point.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    pub width: u32,
    pub height: u32,
    pub data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self> {
        check_len(width, height, data.len(), "image")?;
        Ok(GrayImage {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height as usize {
            for x in 0..width as usize {
                data.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            data,
        }
    }

    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width as usize + x]
    }

    /// Rec.709 luma from linear RGB triples.
    pub fn from_rgb(width: u32, height: u32, rgb: &[[f32; 3]]) -> Result<Self> {
        let data = rgb
            .iter()
            .map(|[r, g, b]| 0.2126 * r + 0.7152 * g + 0.0722 * b)
            .collect();
        GrayImage::new(width, height, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orientation_wraps_and_masks() {
        let map =
            OrientationMap::new(2, 1, vec![(PI + 0.25) as f32, 0.7], vec![true, false]).unwrap();
        assert!((map.get(0, 0).unwrap() - 0.25).abs() < 1e-6);
        assert_eq!(map.get(1, 0), None);
        assert_eq!(map.angles()[1], ORIENTATION_SENTINEL);
    }

    #[test]
    fn negative_confidence_rejected() {
        assert!(ConfidenceMap::new(1, 1, vec![-0.5]).is_err());
        assert!(ConfidenceMap::new(1, 2, vec![0.5]).is_err());
    }

    #[test]
    fn depth_rejects_nonpositive() {
        assert!(DepthMap::new(1, 1, vec![0.0]).is_err());
        assert!(DepthMap::new(1, 1, vec![f32::INFINITY]).is_ok());
    }

    #[test]
    fn rec709_luma() {
        let img = GrayImage::from_rgb(1, 1, &[[1.0, 1.0, 1.0]]).unwrap();
        assert!((img.data[0] - 1.0).abs() < 1e-6);
    }
}
