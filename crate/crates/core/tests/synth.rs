use hairline::line::line_angle;
use hairline::strand::polyline_length;
use hairline::synth::{
    evaluate, gen_hairstyle, inject_noise, EvalSamples, EvalThreshold, HairstyleParams, Style,
};
use hairline::{Strand, StrandSet, Vec3};
use proptest::prelude::*;

/// Curvature of the circle through three consecutive vertices.
fn menger_curvature(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
    let area2 = (b - a).cross(&(c - a)).norm();
    2.0 * area2 / ((b - a).norm() * (c - b).norm() * (c - a).norm())
}

#[test]
fn helix_curvature_matches_closed_form() {
    let params = HairstyleParams::default();
    let want = params.helix_curvature();
    let (set, _) = gen_hairstyle(Style::Helix, 20, 4).unwrap();
    for s in &set.strands {
        let mut ks = Vec::new();
        for i in 1..s.vertices.len() - 1 {
            if polyline_length(&s.vertices[..=i]) < params.helix_ramp + 5.0 {
                continue;
            }
            ks.push(menger_curvature(
                &s.vertices[i - 1],
                &s.vertices[i],
                &s.vertices[i + 1],
            ));
        }
        ks.sort_by(f64::total_cmp);
        let median = ks[ks.len() / 2];
        assert!(
            (median - want).abs() <= 0.1 * want,
            "median {median} vs {want}"
        );
    }
}

/// Brute-force matched share, independent of the spatial index.
fn brute_percent(from: &EvalSamples, to: &EvalSamples, t: &EvalThreshold) -> f64 {
    let hits = from
        .points
        .iter()
        .zip(&from.tangents)
        .filter(|(p, d)| {
            to.points.iter().zip(&to.tangents).any(|(q, e)| {
                (*p - q).norm() <= t.distance && line_angle(d, e).to_degrees() <= t.angle
            })
        })
        .count();
    100.0 * hits as f64 / from.len() as f64
}

#[test]
fn half_prediction_matches_brute_force() {
    let (gt, _) = gen_hairstyle(Style::Wavy, 8, 2).unwrap();
    let half = StrandSet::new(gt.strands[..4].to_vec());
    let (p, g) = (
        EvalSamples::from_strands(&half),
        EvalSamples::from_strands(&gt),
    );
    let t = EvalThreshold::new(2.0, 20.0).unwrap();
    let r = evaluate(&p, &g, &[t]).unwrap();
    let s = r.scores[0];
    assert_eq!(s.precision, 100.0);
    assert!((s.recall - brute_percent(&g, &p, &t)).abs() < 1e-9);
    assert!((s.recall - 50.0).abs() < 5.0, "recall {}", s.recall);
}

fn samples(seed: u64, count: usize) -> (StrandSet, EvalSamples) {
    let (set, _) = gen_hairstyle(Style::Wavy, count, seed).unwrap();
    let s = EvalSamples::from_strands(&set);
    (set, s)
}

fn jittered(set: &StrandSet, amount: f64) -> StrandSet {
    StrandSet::new(
        set.strands
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let v = s
                    .vertices
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let phase = (i * 7 + k * 13) as f64;
                        p + amount
                            * Vec3::new(phase.sin(), (1.3 * phase).cos(), (0.7 * phase).sin())
                    })
                    .collect();
                Strand::new(v, s.rooted).unwrap()
            })
            .collect(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn precision_of_a_is_recall_of_b(seed in 0u64..100, amount in 0.0f64..3.0, d in 0.5f64..5.0, a in 5.0f64..45.0) {
        let (set, gt) = samples(seed, 4);
        let pred = EvalSamples::from_strands(&jittered(&set, amount));
        let t = EvalThreshold::new(d, a).unwrap();
        let ab = evaluate(&pred, &gt, &[t]).unwrap().scores[0];
        let ba = evaluate(&gt, &pred, &[t]).unwrap().scores[0];
        prop_assert_eq!(ab.precision, ba.recall);
        prop_assert_eq!(ab.recall, ba.precision);
    }

    #[test]
    fn reversal_and_sign_do_not_change_scores(seed in 0u64..100, amount in 0.0f64..3.0) {
        let (set, gt) = samples(seed, 4);
        let pred_set = jittered(&set, amount);
        let pred = EvalSamples::from_strands(&pred_set);
        let reversed = StrandSet::new(pred_set.strands.iter().map(Strand::reversed).collect());
        let flipped = EvalSamples::new(pred.points.clone(), pred.tangents.iter().map(|t| -t).collect()).unwrap();
        let ts = EvalThreshold::defaults();
        let base = evaluate(&pred, &gt, &ts).unwrap();
        let rev = evaluate(&EvalSamples::from_strands(&reversed), &gt, &ts).unwrap();
        let flip = evaluate(&flipped, &gt, &ts).unwrap();
        for ((b, r), f) in base.scores.iter().zip(&rev.scores).zip(&flip.scores) {
            prop_assert!((b.precision - r.precision).abs() < 1e-9);
            prop_assert!((b.recall - r.recall).abs() < 1e-9);
            prop_assert_eq!(b, f);
        }
    }

    #[test]
    fn larger_thresholds_never_score_lower(
        seed in 0u64..100,
        amount in 0.0f64..3.0,
        d in 0.5f64..4.0,
        a in 5.0f64..40.0,
        dd in 0.0f64..3.0,
        da in 0.0f64..30.0,
    ) {
        let (set, gt) = samples(seed, 4);
        let pred = EvalSamples::from_strands(&jittered(&set, amount));
        let ts = [
            EvalThreshold::new(d, a).unwrap(),
            EvalThreshold::new(d + dd, a).unwrap(),
            EvalThreshold::new(d, a + da).unwrap(),
        ];
        let s = evaluate(&pred, &gt, &ts).unwrap().scores;
        for wider in &s[1..] {
            prop_assert!(wider.precision >= s[0].precision);
            prop_assert!(wider.recall >= s[0].recall);
            prop_assert!(wider.f_score >= s[0].f_score - 1e-12);
        }
    }

    #[test]
    fn injected_noise_hits_the_fraction(n in 1usize..3000, fraction in 0.0f64..0.95, seed in any::<u64>()) {
        let cloud: Vec<Vec3> = (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let bounds = (Vec3::new(-5.0, -5.0, -5.0), Vec3::new(5.0, 5.0, 5.0));
        let out = inject_noise(&cloud, fraction, bounds, seed).unwrap();
        prop_assert_eq!(&out[..n], &cloud[..]);
        let added = out.len() - n;
        let expect = fraction * out.len() as f64;
        prop_assert!((added as f64 - expect).abs() <= 1.0 / (1.0 - fraction), "{} vs {}", added, expect);
        for p in &out[n..] {
            prop_assert!(p.iter().zip(bounds.0.iter().zip(bounds.1.iter())).all(|(x, (lo, hi))| lo <= x && x <= hi));
        }
        prop_assert_eq!(&out, &inject_noise(&cloud, fraction, bounds, seed).unwrap());
    }
}
