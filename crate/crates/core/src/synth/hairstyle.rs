use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalp::ScalpModel;
use crate::strand::{Strand, StrandSet};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Style {
    Straight,
    Wavy,
    Helix,
}

impl std::str::FromStr for Style {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "straight" => Ok(Style::Straight),
            "wavy" => Ok(Style::Wavy),
            "helix" => Ok(Style::Helix),
            _ => Err(Error::Validation(format!("unknown hairstyle '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HairstyleParams {
    pub scalp_radius: f64,
    /// Polar extent of the scalp cap, degrees.
    pub cap_polar_deg: f64,
    /// Roots are sampled where the polar angle lies in this band, degrees.
    pub root_band_deg: (f64, f64),
    pub length: f64,
    pub spacing: f64,
    pub wavy_amplitude: f64,
    pub wavy_period: f64,
    pub helix_radius: f64,
    pub helix_period: f64,
    /// Arc length over which the helix radius ramps up from the root.
    pub helix_ramp: f64,
}

impl Default for HairstyleParams {
    fn default() -> Self {
        HairstyleParams {
            scalp_radius: 90.0,
            cap_polar_deg: 75.0,
            root_band_deg: (30.0, 70.0),
            length: 120.0,
            spacing: 1.0,
            wavy_amplitude: 2.0,
            wavy_period: 30.0,
            helix_radius: 2.0,
            helix_period: 20.0,
            helix_ramp: 25.0,
        }
    }
}

impl HairstyleParams {
    pub fn scalp(&self) -> ScalpModel {
        ScalpModel::sphere_cap(
            Vec3::zeros(),
            self.scalp_radius,
            self.cap_polar_deg.to_radians(),
            24,
            48,
        )
    }

    /// Closed-form curvature of the fully ramped helix.
    pub fn helix_curvature(&self) -> f64 {
        let w = 2.0 * PI / self.helix_period;
        let a = self.helix_radius;
        a * w * w / (1.0 + a * a * w * w)
    }
}

fn sample_roots(
    scalp: &ScalpModel,
    count: usize,
    band: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Vec<(Vec3, Vec3)> {
    let (lo, hi) = (band.0.to_radians(), band.1.to_radians());
    let eligible: Vec<usize> = (0..scalp.faces().len())
        .filter(|&f| {
            let t = scalp.triangle(f);
            let c = (t[0] + t[1] + t[2]) / 3.0;
            let polar = (c.z / c.norm()).clamp(-1.0, 1.0).acos();
            polar >= lo && polar <= hi
        })
        .collect();
    let mut cdf = Vec::with_capacity(eligible.len());
    let mut total = 0.0;
    for &f in &eligible {
        total += scalp.face_area(f);
        cdf.push(total);
    }
    (0..count)
        .map(|_| {
            let x = rng.random::<f64>() * total;
            let i = cdf.partition_point(|c| *c <= x).min(eligible.len() - 1);
            let f = eligible[i];
            let (r1, r2): (f64, f64) = (rng.random(), rng.random());
            let s = r1.sqrt();
            let p = scalp.point_on_face(f, s * (1.0 - r2), s * r2);
            (p, scalp.face_normal(f))
        })
        .collect()
}

fn grow(style: Style, root: Vec3, n: Vec3, phase: f64, p: &HairstyleParams) -> Vec<Vec3> {
    let u = (n - Vec3::z()).normalize();
    let side = u.cross(&n).normalize();
    let out = side.cross(&u);
    let steps = (p.length / p.spacing).round() as usize;
    match style {
        Style::Straight => (0..=steps)
            .map(|k| root + u * (k as f64 * p.spacing))
            .collect(),
        Style::Wavy => {
            let w = 2.0 * PI / p.wavy_period;
            (0..=steps)
                .map(|k| {
                    let s = k as f64 * p.spacing;
                    root + u * s + side * (p.wavy_amplitude * ((w * s + phase).sin() - phase.sin()))
                })
                .collect()
        }
        Style::Helix => {
            let w = 2.0 * PI / p.helix_period;
            let a = p.helix_radius;
            let ds = p.spacing / (1.0 + a * a * w * w).sqrt();
            let steps = (p.length / ds).round() as usize;
            (0..=steps)
                .map(|k| {
                    let s = k as f64 * ds;
                    let r = a * (s / p.helix_ramp).min(1.0);
                    let t = w * s + phase;
                    root + u * s
                        + (out * (t.cos() - phase.cos()) + side * (t.sin() - phase.sin())) * r
                })
                .collect()
        }
    }
}

/// Grows `count` strands from area-uniform roots on a spherical scalp cap.
pub fn gen_hairstyle(style: Style, count: usize, seed: u64) -> Result<(StrandSet, ScalpModel)> {
    gen_hairstyle_with(style, count, seed, &HairstyleParams::default())
}

pub fn gen_hairstyle_with(
    style: Style,
    count: usize,
    seed: u64,
    params: &HairstyleParams,
) -> Result<(StrandSet, ScalpModel)> {
    if count == 0 {
        return Err(Error::InvalidParameter(
            "strand count must be at least 1".into(),
        ));
    }
    if !(params.length > 0.0 && params.spacing > 0.0) {
        return Err(Error::InvalidParameter(
            "strand length and spacing must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scalp = params.scalp();
    let roots = sample_roots(&scalp, count, params.root_band_deg, &mut rng);
    let strands = roots
        .iter()
        .map(|(r, n)| {
            let phase = rng.random::<f64>() * 2.0 * PI;
            Strand::new(grow(style, *r, *n, phase, params), true)
        })
        .collect::<Result<Vec<_>>>()?;
    let scalp = scalp.with_roots(roots.into_iter().map(|r| r.0).collect())?;
    Ok((StrandSet::new(strands), scalp))
}
