use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line::{line_angle, LineMap};
use crate::spatial::PointIndex;
use crate::strand::{polyline_tangents, resample_polyline, StrandSet};
use crate::Vec3;

/// Vertex spacing both sides are resampled to before matching, mm.
pub const EVAL_SPACING: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalThreshold {
    /// mm.
    pub distance: f64,
    /// Degrees.
    pub angle: f64,
}

impl EvalThreshold {
    pub fn new(distance: f64, angle: f64) -> Result<Self> {
        if !(distance > 0.0 && angle > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "thresholds must be positive, got {distance}/{angle}"
            )));
        }
        Ok(EvalThreshold { distance, angle })
    }

    pub fn defaults() -> Vec<EvalThreshold> {
        vec![
            EvalThreshold {
                distance: 2.0,
                angle: 20.0,
            },
            EvalThreshold {
                distance: 3.0,
                angle: 30.0,
            },
            EvalThreshold {
                distance: 4.0,
                angle: 40.0,
            },
        ]
    }

    /// Parses `"2/20,3/30"`.
    pub fn parse_list(s: &str) -> Result<Vec<EvalThreshold>> {
        s.split(',')
            .map(|item| {
                let (d, a) = item.trim().split_once('/').ok_or_else(|| {
                    Error::Validation(format!("threshold '{item}' is not distance/angle"))
                })?;
                let num = |v: &str| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Validation(format!("bad number in threshold '{item}'")))
                };
                EvalThreshold::new(num(d)?, num(a)?)
            })
            .collect()
    }
}

impl std::fmt::Display for EvalThreshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.distance, self.angle)
    }
}

/// Points with undirected tangents, the common input of [`evaluate`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalSamples {
    pub points: Vec<Vec3>,
    pub tangents: Vec<Vec3>,
}

impl EvalSamples {
    pub fn new(points: Vec<Vec3>, tangents: Vec<Vec3>) -> Result<Self> {
        if points.len() != tangents.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} tangents", points.len()),
                found: tangents.len().to_string(),
            });
        }
        Ok(EvalSamples { points, tangents })
    }

    /// Every strand resampled at [`EVAL_SPACING`].
    pub fn from_strands(set: &StrandSet) -> Self {
        let mut out = EvalSamples::default();
        for s in &set.strands {
            let v = resample_polyline(&s.vertices, EVAL_SPACING);
            if v.len() < 2 {
                continue;
            }
            out.tangents.extend(polyline_tangents(&v));
            out.points.extend(v);
        }
        out
    }

    pub fn from_line_map(map: &LineMap) -> Self {
        EvalSamples {
            points: map.positions(),
            tangents: map.points().iter().map(|p| p.direction()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdScore {
    pub threshold: EvalThreshold,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scores: Vec<ThresholdScore>,
    pub pred_points: usize,
    pub gt_points: usize,
    /// Set when the prediction had no points; all scores are then 0.
    pub empty_prediction: bool,
}

/// Percentage of `from` points that have a `to` point within the distance
/// and undirected angle thresholds.
fn matched_percent(
    from: &EvalSamples,
    to: &EvalSamples,
    index: &PointIndex,
    t: &EvalThreshold,
) -> f64 {
    if from.is_empty() {
        return 0.0;
    }
    let max_angle = t.angle.to_radians();
    let hits = from
        .points
        .par_iter()
        .zip(&from.tangents)
        .filter(|(p, d)| {
            index.within(p, t.distance).iter().any(|n| {
                n.distance <= t.distance && line_angle(d, &to.tangents[n.index]) <= max_angle
            })
        })
        .count();
    100.0 * hits as f64 / from.len() as f64
}

/// Point-wise precision, recall and F-score, as percentages.
pub fn evaluate(
    pred: &EvalSamples,
    gt: &EvalSamples,
    thresholds: &[EvalThreshold],
) -> Result<EvalReport> {
    if gt.is_empty() {
        return Err(Error::EmptyInput("ground truth"));
    }
    let empty = pred.is_empty();
    let gt_index = PointIndex::new(&gt.points);
    let pred_index = PointIndex::new(&pred.points);
    let scores = thresholds
        .iter()
        .map(|t| {
            let (precision, recall) = if empty {
                (0.0, 0.0)
            } else {
                (
                    matched_percent(pred, gt, &gt_index, t),
                    matched_percent(gt, pred, &pred_index, t),
                )
            };
            let f_score = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ThresholdScore {
                threshold: *t,
                precision,
                recall,
                f_score,
            }
        })
        .collect();
    Ok(EvalReport {
        scores,
        pred_points: pred.len(),
        gt_points: gt.len(),
        empty_prediction: empty,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strand::Strand;

    fn straight(x: f64) -> Strand {
        Strand::new(
            (0..=40).map(|k| Vec3::new(x, 0.0, k as f64)).collect(),
            true,
        )
        .unwrap()
    }

    #[test]
    fn identical_sets_score_full() {
        let gt = EvalSamples::from_strands(&StrandSet::new(vec![straight(0.0), straight(10.0)]));
        let r = evaluate(&gt, &gt, &EvalThreshold::defaults()).unwrap();
        for s in &r.scores {
            assert_eq!((s.precision, s.recall, s.f_score), (100.0, 100.0, 100.0));
        }
    }

    #[test]
    fn rotated_tangents_straddle_thresholds() {
        let gt = EvalSamples::from_strands(&StrandSet::new(vec![straight(0.0)]));
        let a = 25f64.to_radians();
        let rot = EvalSamples::new(
            gt.points.clone(),
            vec![Vec3::new(a.sin(), 0.0, a.cos()); gt.len()],
        )
        .unwrap();
        let r = evaluate(&rot, &gt, &EvalThreshold::defaults()).unwrap();
        assert_eq!(r.scores[0].precision, 0.0);
        assert_eq!(r.scores[1].precision, 100.0);
    }

    #[test]
    fn half_prediction() {
        let all = StrandSet::new(vec![straight(0.0), straight(50.0)]);
        let half = StrandSet::new(vec![straight(0.0)]);
        let r = evaluate(
            &EvalSamples::from_strands(&half),
            &EvalSamples::from_strands(&all),
            &EvalThreshold::defaults(),
        )
        .unwrap();
        assert_eq!(r.scores[0].precision, 100.0);
        assert_eq!(r.scores[0].recall, 50.0);
    }

    #[test]
    fn empty_prediction_is_flagged() {
        let gt = EvalSamples::from_strands(&StrandSet::new(vec![straight(0.0)]));
        let r = evaluate(&EvalSamples::default(), &gt, &EvalThreshold::defaults()).unwrap();
        assert!(r.empty_prediction);
        assert!(r.scores.iter().all(|s| s.f_score == 0.0));
    }

    #[test]
    fn parse_thresholds() {
        let t = EvalThreshold::parse_list("2/20, 3/30,4/40").unwrap();
        assert_eq!(t, EvalThreshold::defaults());
        assert!(EvalThreshold::parse_list("2-20").is_err());
        assert!(EvalThreshold::parse_list("0/20").is_err());
    }
}
