use hairline::strandgen::{
    connect_strands, merge_geometry, stratified_seeds, trace_from, trace_segments, ConnectConfig,
    TraceConfig,
};
use hairline::synth::{gen_hairstyle, Style};
use hairline::{Error, GridSpec, OrientationGrid, ScalpModel, Vec3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

/// Circles about the z axis through the middle of a 64x64x8 grid of 1 mm voxels.
fn vortex() -> &'static OrientationGrid {
    static G: OnceLock<OrientationGrid> = OnceLock::new();
    G.get_or_init(|| {
        let spec = GridSpec::new([64, 64, 8], Vec3::new(-32.0, -32.0, 0.0), 1.0).unwrap();
        let mut g = OrientationGrid::empty(spec);
        for i in 0..spec.len() {
            let c = spec.center(spec.unlinear(i));
            if c.xy().norm() > 2.0 {
                g.set_linear(i, Vec3::new(-c.y, c.x, 0.0).normalize(), false);
            }
        }
        g
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn every_step_has_length_h(h in 0.2f64..1.0, stride in 3usize..8) {
        let g = vortex();
        let seeds = stratified_seeds(g, stride);
        let cfg = TraceConfig { step: Some(h), max_steps: 60, ..TraceConfig::default() };
        let segs = trace_segments(g, &seeds, &cfg);
        prop_assert!(!segs.is_empty());
        for s in &segs {
            for w in s.windows(2) {
                prop_assert!(((w[1] - w[0]).norm() - h).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn circle_traces_hold_their_radius(r in 8.0f64..26.0, a in 0.0f64..std::f64::consts::TAU) {
        let seed = Vec3::new(r * a.cos(), r * a.sin(), 4.0);
        let line = trace_from(vortex(), &seed, 0.5, (0.25 * std::f64::consts::TAU * r / 0.5) as usize).unwrap();
        for p in &line {
            prop_assert!((p.xy().norm() - r).abs() < 1.0, "{} drifted to {}", r, p.xy().norm());
            prop_assert!((p.z - 4.0).abs() < 1e-9);
        }
    }
}

struct Cut {
    segments: Vec<Vec<Vec3>>,
    scalp: ScalpModel,
}

/// Ground-truth strands cut into 10-vertex pieces, some reversed, shuffled.
fn cut(seed: u64) -> Cut {
    let (set, scalp) = gen_hairstyle(Style::Straight, 12, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut segments = Vec::new();
    for s in &set.strands {
        for c in s.vertices.chunks(10).filter(|c| c.len() >= 2) {
            let mut c = c.to_vec();
            if rng.random_bool(0.5) {
                c.reverse();
            }
            segments.push(c);
        }
    }
    segments.shuffle(&mut rng);
    Cut { segments, scalp }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn connection_ignores_input_order(seed in 0u64..1000, shuffle in 0u64..1000) {
        let c = cut(seed % 5);
        let cfg = ConnectConfig::default();
        let base = connect_strands(&c.segments, &c.scalp, &cfg);
        let mut perm: Vec<usize> = (0..c.segments.len()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle));
        let permuted: Vec<Vec<Vec3>> = perm.iter().map(|&i| c.segments[i].clone()).collect();
        let other = connect_strands(&permuted, &c.scalp, &cfg);
        prop_assert_eq!(&base.strands, &other.strands);
        for (a, b) in base.members.iter().zip(&other.members) {
            let mut mapped: Vec<usize> = b.iter().map(|&j| perm[j]).collect();
            let mut a = a.clone();
            mapped.sort_unstable();
            a.sort_unstable();
            prop_assert_eq!(a, mapped);
        }
    }

    #[test]
    fn connection_ignores_segment_direction(seed in 0u64..5, flips in proptest::collection::vec(any::<bool>(), 16)) {
        let c = cut(seed);
        let cfg = ConnectConfig::default();
        let flipped: Vec<Vec<Vec3>> = c
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let mut s = s.clone();
                if flips[i % 16] {
                    s.reverse();
                }
                s
            })
            .collect();
        prop_assert_eq!(connect_strands(&c.segments, &c.scalp, &cfg), connect_strands(&flipped, &c.scalp, &cfg));
    }
}

#[test]
fn segments_belong_to_at_most_one_strand() {
    for seed in 0..5 {
        let c = cut(seed);
        let res = connect_strands(&c.segments, &c.scalp, &ConnectConfig::default());
        assert_eq!(res.members.len(), res.strands.len());
        let mut seen = vec![false; c.segments.len()];
        for m in &res.members {
            for &i in m {
                assert!(!seen[i], "segment {i} used twice");
                seen[i] = true;
            }
        }
    }
}

#[test]
fn rooted_strands_start_on_the_scalp() {
    for seed in 0..5 {
        let c = cut(seed);
        let res = connect_strands(&c.segments, &c.scalp, &ConnectConfig::default());
        assert!(res.rooted > 0);
        assert_eq!(res.strands.rooted_count(), res.rooted);
        for s in res.strands.strands.iter().filter(|s| s.rooted) {
            let d = c.scalp.distance(&s.vertices[0]);
            assert!(d <= 2.0, "root {} mm off the scalp", d);
        }
    }
}

#[test]
fn exterior_wins_and_invisible_filter_applies() {
    let spec = GridSpec::new([4, 1, 1], Vec3::zeros(), 1.0).unwrap();
    let mut ext = OrientationGrid::empty(spec);
    let mut int = OrientationGrid::empty(spec);
    ext.set_linear(0, Vec3::x(), true);
    for i in 0..4 {
        int.set_linear(i, Vec3::z(), false);
    }
    let merged = merge_geometry(&ext, &int, None).unwrap();
    assert_eq!(merged.direction_linear(0), Some(Vec3::x()));
    assert!(merged.is_exterior_linear(0));
    assert_eq!(merged.direction_linear(3), Some(Vec3::z()));
    assert!(!merged.is_exterior_linear(3));

    let left_half = |p: &Vec3| p.x < 2.0;
    let merged = merge_geometry(&ext, &int, Some(&left_half)).unwrap();
    assert_eq!(merged.occupied_count(), 2);

    let other = OrientationGrid::empty(GridSpec::new([4, 1, 1], Vec3::zeros(), 2.0).unwrap());
    assert!(matches!(
        merge_geometry(&ext, &other, None),
        Err(Error::GridSpecMismatch(_))
    ));
}
