//! Decoding photographs and hair masks into the library's raster types.

use std::path::Path;

use crate::error::{Error, Result};
use crate::maps::GrayImage;

/// Loads any format the `image` crate decodes and converts it to Rec.709
/// luma in `[0, 1]`.
pub fn load_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?
        .to_rgb32f();
    let (w, h) = img.dimensions();
    let rgb: Vec<[f32; 3]> = img.pixels().map(|p| p.0).collect();
    GrayImage::from_rgb(w, h, &rgb)
}

/// Loads a mask image; any pixel with nonzero luma is hair.
pub fn load_mask(path: impl AsRef<Path>) -> Result<(u32, u32, Vec<bool>)> {
    let path = path.as_ref();
    let img = image::open(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))?
        .to_luma8();
    let (w, h) = img.dimensions();
    Ok((w, h, img.pixels().map(|p| p.0[0] > 0).collect()))
}

/// Writes a gray image as 8-bit PNG (values clamped to `[0, 1]`).
pub fn save_gray_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = img
        .data
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    image::GrayImage::from_raw(img.width, img.height, bytes)
        .expect("buffer matches dimensions")
        .save(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

/// Writes a mask as an 8-bit PNG of 0/255.
pub fn save_mask_png(width: u32, height: u32, mask: &[bool], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes: Vec<u8> = mask.iter().map(|m| if *m { 255 } else { 0 }).collect();
    image::GrayImage::from_raw(width, height, bytes)
        .ok_or_else(|| Error::DimensionMismatch {
            expected: format!("{width}x{height}"),
            found: format!("{} mask values", mask.len()),
        })?
        .save(path)
        .map_err(|e| Error::Image(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(5, 3, |x, y| (x + y) as f32 / 6.0);
        let p = dir.path().join("g.png");
        save_gray_png(&img, &p).unwrap();
        let back = load_gray(&p).unwrap();
        for (a, b) in img.data.iter().zip(&back.data) {
            assert!((a - b).abs() < 1.0 / 255.0 + 1e-6);
        }
        let m = dir.path().join("m.png");
        save_mask_png(2, 1, &[true, false], &m).unwrap();
        assert_eq!(load_mask(&m).unwrap().2, vec![true, false]);
    }
}
