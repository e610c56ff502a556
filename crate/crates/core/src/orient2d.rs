//! 2D orientation and confidence from an oriented Gabor filter bank.
//!
//! Kernel `j` is tuned to hair running at `theta_j = j * pi / n` from the
//! image x-axis (pixel coordinates, y down). Its carrier oscillates across
//! the hair direction and its envelope is elongated along it. Each kernel is
//! a quadrature pair, and the response is the pair's magnitude, so the
//! estimate does not depend on where the stripes sit relative to the pixel.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::maps::{ConfidenceMap, GrayImage, OrientationMap};

const CONFIDENCE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaborParams {
    pub n_orientations: usize,
    /// Envelope width across the hair direction, in pixels.
    pub sigma_x: f64,
    /// Envelope width along the hair direction, in pixels.
    pub sigma_y: f64,
    /// Carrier frequency in cycles per pixel.
    pub frequency: f64,
    pub kernel_size: usize,
}

impl Default for GaborParams {
    fn default() -> Self {
        GaborParams {
            n_orientations: 180,
            sigma_x: 1.8,
            sigma_y: 2.4,
            frequency: 0.25,
            kernel_size: 17,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GaborKernel {
    pub theta: f64,
    /// Even (cosine) part, row-major `k x k`.
    pub even: Vec<f32>,
    /// Odd (sine) part, row-major `k x k`.
    pub odd: Vec<f32>,
}

#[derive(Debug, Clone)]
pub struct GaborBank {
    params: GaborParams,
    kernels: Vec<GaborKernel>,
}

fn zero_mean_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

pub fn build_bank(params: GaborParams) -> Result<GaborBank> {
    let GaborParams {
        n_orientations: n,
        sigma_x,
        sigma_y,
        frequency,
        kernel_size: k,
    } = params;
    if k % 2 == 0 || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "kernel size must be odd, got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 orientations, got {n}"
        )));
    }
    for (name, v) in [
        ("sigma_x", sigma_x),
        ("sigma_y", sigma_y),
        ("frequency", frequency),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    let half = (k / 2) as f64;
    let kernels = (0..n)
        .map(|j| {
            let theta = j as f64 * PI / n as f64;
            let (s, c) = theta.sin_cos();
            let mut even = Vec::with_capacity(k * k);
            let mut odd = Vec::with_capacity(k * k);
            for yi in 0..k {
                for xi in 0..k {
                    let x = xi as f64 - half;
                    let y = yi as f64 - half;
                    let along = x * c + y * s;
                    let across = -x * s + y * c;
                    let env = (-0.5
                        * (across * across / (sigma_x * sigma_x)
                            + along * along / (sigma_y * sigma_y)))
                        .exp();
                    let phase = 2.0 * PI * frequency * across;
                    even.push(env * phase.cos());
                    odd.push(env * phase.sin());
                }
            }
            zero_mean_unit(&mut even);
            zero_mean_unit(&mut odd);
            GaborKernel {
                theta,
                even: even.into_iter().map(|v| v as f32).collect(),
                odd: odd.into_iter().map(|v| v as f32).collect(),
            }
        })
        .collect();
    Ok(GaborBank { params, kernels })
}

impl GaborBank {
    pub fn params(&self) -> &GaborParams {
        &self.params
    }

    pub fn kernels(&self) -> &[GaborKernel] {
        &self.kernels
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    /// Response magnitude of every kernel at one pixel.
    pub fn responses_at(&self, image: &GrayImage, x: usize, y: usize) -> Vec<f64> {
        let patch = gather_patch(image, x, y, self.params.kernel_size);
        self.kernels
            .iter()
            .map(|kern| {
                let mut re = 0.0f32;
                let mut im = 0.0f32;
                for ((p, e), o) in patch.iter().zip(&kern.even).zip(&kern.odd) {
                    re += p * e;
                    im += p * o;
                }
                ((re as f64).powi(2) + (im as f64).powi(2)).sqrt()
            })
            .collect()
    }
}

fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let m = i.rem_euclid(period);
    (if m >= n { period - m } else { m }) as usize
}

/// `k x k` neighborhood with reflect padding, with the local mean removed.
fn gather_patch(image: &GrayImage, x: usize, y: usize, k: usize) -> Vec<f32> {
    let h = (k / 2) as isize;
    let (w, ht) = (image.width as usize, image.height as usize);
    let mut out = Vec::with_capacity(k * k);
    for dy in -h..=h {
        let yy = reflect(y as isize + dy, ht);
        for dx in -h..=h {
            let xx = reflect(x as isize + dx, w);
            out.push(image.get(xx, yy));
        }
    }
    let mean = out.iter().map(|v| *v as f64).sum::<f64>() / out.len() as f64;
    out.iter_mut().for_each(|v| *v = (*v as f64 - mean) as f32);
    out
}

/// Orientation = angle of the strongest kernel; confidence =
/// `(max - mean) / (max + eps)` over the bank. Only masked pixels are
/// evaluated.
pub fn extract_orientation(
    image: &GrayImage,
    bank: &GaborBank,
    mask: &[bool],
) -> Result<(OrientationMap, ConfidenceMap)> {
    let (w, h) = (image.width, image.height);
    if mask.len() != image.data.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("mask of {w}x{h} pixels"),
            found: format!("{} mask values", mask.len()),
        });
    }
    let rows: Vec<Vec<(usize, f64, f64)>> = (0..h as usize)
        .into_par_iter()
        .map(|y| {
            (0..w as usize)
                .filter(|&x| mask[y * w as usize + x])
                .map(|x| {
                    let resp = bank.responses_at(image, x, y);
                    let mut best = 0;
                    for (j, r) in resp.iter().enumerate() {
                        if *r > resp[best] {
                            best = j;
                        }
                    }
                    let max = resp[best];
                    let mean = resp.iter().sum::<f64>() / resp.len() as f64;
                    let conf = ((max - mean) / (max + CONFIDENCE_EPS)).max(0.0);
                    (x, bank.kernels[best].theta, conf)
                })
                .collect()
        })
        .collect();
    let mut orient = OrientationMap::empty(w, h);
    let mut conf = ConfidenceMap::zeros(w, h);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, angle, c) in row {
            orient.set(x, y, angle);
            conf.set(x, y, c);
        }
    }
    Ok((orient, conf))
}

/// Sinusoidal stripes running along `theta`: intensity varies only across
/// the hair direction.
pub fn grating(width: u32, height: u32, theta: f64, frequency: f64, phase: f64) -> GrayImage {
    let (s, c) = theta.sin_cos();
    GrayImage::from_fn(width, height, |x, y| {
        let across = -(x as f64) * s + y as f64 * c;
        (0.5 + 0.5 * (2.0 * PI * frequency * across + phase).cos()) as f32
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::wrap_orientation;

    fn center_mask(w: u32, h: u32, margin: usize) -> Vec<bool> {
        let mut m = vec![false; (w * h) as usize];
        for y in margin..h as usize - margin {
            for x in margin..w as usize - margin {
                m[y * w as usize + x] = true;
            }
        }
        m
    }

    fn angle_err(a: f64, b: f64) -> f64 {
        let d = wrap_orientation(a - b);
        d.min(PI - d)
    }

    #[test]
    fn default_bank_shape() {
        let bank = build_bank(GaborParams::default()).unwrap();
        assert_eq!(bank.len(), 180);
        for k in bank.kernels() {
            assert_eq!(k.even.len(), 17 * 17);
            let mean: f64 = k.even.iter().map(|v| *v as f64).sum();
            assert!(mean.abs() < 1e-6);
            let norm: f64 = k.even.iter().map(|v| (*v as f64).powi(2)).sum();
            assert!((norm - 1.0).abs() < 1e-5);
        }
    }

    #[test]
    fn even_kernel_rejected() {
        let p = GaborParams {
            kernel_size: 4,
            ..GaborParams::default()
        };
        assert!(build_bank(p).is_err());
        let p = GaborParams {
            sigma_x: 0.0,
            ..GaborParams::default()
        };
        assert!(build_bank(p).is_err());
    }

    #[test]
    fn grating_at_30_degrees() {
        let bank = build_bank(GaborParams::default()).unwrap();
        let theta = 30f64.to_radians();
        let img = grating(48, 40, theta, 0.25, 0.3);
        let mask = center_mask(48, 40, 4);
        let (o, _) = extract_orientation(&img, &bank, &mask).unwrap();
        let errs: Vec<f64> = (0..o.angles().len())
            .filter(|i| mask[*i])
            .map(|i| angle_err(o.angles()[i] as f64, theta))
            .collect();
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        assert!(mean.to_degrees() < 2.0, "mean error {}", mean.to_degrees());
    }

    #[test]
    fn constant_image_has_no_confidence() {
        let bank = build_bank(GaborParams::default()).unwrap();
        let img = GrayImage::from_fn(20, 20, |_, _| 0.5);
        let (_, c) = extract_orientation(&img, &bank, &vec![true; 400]).unwrap();
        assert!(c.values().iter().all(|v| *v < 1e-3));
    }

    #[test]
    fn opposite_direction_gives_identical_maps() {
        let bank = build_bank(GaborParams::default()).unwrap();
        let theta = 0.7;
        let a = grating(32, 32, theta, 0.25, 0.0);
        let b = grating(32, 32, theta + PI, 0.25, 0.0);
        let mask = center_mask(32, 32, 2);
        let (oa, _) = extract_orientation(&a, &bank, &mask).unwrap();
        let (ob, _) = extract_orientation(&b, &bank, &mask).unwrap();
        assert_eq!(oa, ob);
    }

    #[test]
    fn empty_mask_and_mismatch() {
        let bank = build_bank(GaborParams::default()).unwrap();
        let img = GrayImage::from_fn(8, 8, |x, _| x as f32);
        let (o, c) = extract_orientation(&img, &bank, &[false; 64]).unwrap();
        assert_eq!(o.masked_count(), 0);
        assert!(c.values().iter().all(|v| *v == 0.0));
        assert!(extract_orientation(&img, &bank, &[true; 10]).is_err());
    }

    #[test]
    fn reflect_indices() {
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-2, 5), 2);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(9, 5), 1);
        assert_eq!(reflect(3, 1), 0);
    }
}
