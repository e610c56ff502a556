use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::strand::{resample_polyline, StrandSet};
use crate::Vec3;

/// Strand vertices resampled at `spacing`, concatenated in strand order.
pub fn sample_cloud(strands: &StrandSet, spacing: f64) -> Vec<Vec3> {
    strands
        .strands
        .iter()
        .flat_map(|s| resample_polyline(&s.vertices, spacing))
        .collect()
}

/// Number of noise points that makes noise / total equal `fraction`.
pub fn noise_count(clean: usize, fraction: f64) -> usize {
    (fraction * clean as f64 / (1.0 - fraction)).round() as usize
}

/// Appends uniform points inside `bounds` so that they make up `fraction`
/// of the output. The input points come first, unchanged.
pub fn inject_noise(
    cloud: &[Vec3],
    fraction: f64,
    bounds: (Vec3, Vec3),
    seed: u64,
) -> Result<Vec<Vec3>> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::InvalidParameter(format!(
            "noise fraction {fraction} is outside [0, 1)"
        )));
    }
    let (lo, hi) = bounds;
    if (0..3).any(|a| !(hi[a] >= lo[a])) {
        return Err(Error::InvalidParameter("noise bounds are inverted".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = cloud.to_vec();
    for _ in 0..noise_count(cloud.len(), fraction) {
        let t = Vec3::new(rng.random(), rng.random(), rng.random());
        out.push(lo + (hi - lo).component_mul(&t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(n: usize) -> Vec<Vec3> {
        (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect()
    }

    #[test]
    fn fraction_examples() {
        let b = (Vec3::zeros(), Vec3::repeat(10.0));
        assert_eq!(inject_noise(&pts(40), 0.0, b, 1).unwrap(), pts(40));
        let out = inject_noise(&pts(40), 0.5, b, 1).unwrap();
        assert_eq!(out.len(), 80);
        assert_eq!(out, inject_noise(&pts(40), 0.5, b, 1).unwrap());
        assert!(out[40..]
            .iter()
            .all(|p| p.iter().all(|v| (0.0..=10.0).contains(v))));
        assert!(inject_noise(&pts(4), 1.0, b, 1).is_err());
    }
}
