//! Turn-prediction accuracy.
//!
//! Keyframe `i` is scored by standing the camera on it, taking keyframe
//! `i + 1` as the bearing reference and keyframe `i + K` as the target. The
//! camera sits exactly on keyframe `i`, which leaves that keyframe no
//! bearing of its own, so the next keyframe takes its place.

use super::synth::{generate_synthetic_map, PathShape, ShapeError};
use crate::guidance::{next_step, planar, Direction, GuidanceConfig};
use crate::model::{Point3, WorldMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionLabel {
    pub keyframe_id: u64,
    pub label: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub map_name: String,
    pub total: usize,
    pub true_positives: usize,
    pub accuracy_percent: f64,
}

impl AccuracyReport {
    pub fn new(map_name: impl Into<String>, total: usize, true_positives: usize) -> Self {
        let accuracy_percent = if total == 0 { 0.0 } else { 100.0 * true_positives as f64 / total as f64 };
        Self { map_name: map_name.into(), total, true_positives, accuracy_percent }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvaluationError {
    #[error("no labels to evaluate")]
    EmptyLabels,
    #[error("label refers to keyframe {0}, which has no lookahead in this map")]
    UnknownKeyframe(u64),
    #[error(transparent)]
    Shape(#[from] ShapeError),
}

/// Which side of the ray `from → toward` the point `target` lies on,
/// measured by bearing angles. `|sin|` of the bearing difference at or
/// below `epsilon` counts as straight.
pub fn half_plane_side(from: &Point3, toward: &Point3, target: &Point3, epsilon: f64) -> Direction {
    let a = planar(&toward.sub(from));
    let b = planar(&target.sub(from));
    // Bearings measured clockwise from +Z, i.e. toward +X (the right).
    let delta = b.x.atan2(b.z) - a.x.atan2(a.z);
    let s = delta.sin();
    if s.abs() <= epsilon || a.norm() == 0.0 || b.norm() == 0.0 {
        Direction::Straight
    } else if s < 0.0 {
        Direction::Left
    } else {
        Direction::Right
    }
}

/// Ground-truth turn labels for every keyframe with a full lookahead
/// window, read off the map's own keyframes. Pass a noiseless map.
pub fn label_ground_truth(map: &WorldMap, lookahead: usize, epsilon: f64) -> Vec<DirectionLabel> {
    let k = lookahead.max(1);
    let n = map.keyframes.len();
    (0..n)
        .take_while(|i| i + k < n)
        .map(|i| {
            let c = |j: usize| map.keyframes[j].center();
            DirectionLabel {
                keyframe_id: map.keyframes[i].id,
                label: half_plane_side(&c(i), &c(i + 1), &c(i + k), epsilon),
            }
        })
        .collect()
}

/// Labels from the noise-free geometry of `shape`.
pub fn label_shape(shape: &PathShape, lookahead: usize, epsilon: f64) -> Result<Vec<DirectionLabel>, ShapeError> {
    let ideal = generate_synthetic_map(&PathShape { map_points: 0, ..shape.clone() }, 0.0, 0)?;
    Ok(label_ground_truth(&ideal, lookahead, epsilon))
}

/// Fraction of labeled keyframes whose predicted turn matches the label.
pub fn next_step_accuracy(
    map: &WorldMap,
    labels: &[DirectionLabel],
    cfg: &GuidanceConfig,
) -> Result<AccuracyReport, EvaluationError> {
    if labels.is_empty() {
        return Err(EvaluationError::EmptyLabels);
    }
    let k = cfg.lookahead.max(1);
    let mut hits = 0;
    for label in labels {
        let i = map
            .keyframes
            .iter()
            .position(|kf| kf.id == label.keyframe_id)
            .filter(|i| i + k < map.keyframes.len())
            .ok_or(EvaluationError::UnknownKeyframe(label.keyframe_id))?;
        let c = |j: usize| map.keyframes[j].center();
        let predicted = next_step(&c(i), &c(i + 1), &c(i + k), cfg).unwrap_or(Direction::Straight);
        if predicted == label.label {
            hits += 1;
        }
    }
    Ok(AccuracyReport::new(map.name.clone(), labels.len(), hits))
}

/// Accuracy over many seeds at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub shape: String,
    pub noise_sigma: f64,
    pub reports: Vec<AccuracyReport>,
    pub mean_percent: f64,
    pub stddev_percent: f64,
}

pub fn monte_carlo(
    shape: &PathShape,
    noise_sigma: f64,
    seeds: impl IntoIterator<Item = u64>,
    cfg: &GuidanceConfig,
) -> Result<MonteCarloSummary, EvaluationError> {
    let labels = label_shape(shape, cfg.lookahead, cfg.colinear_epsilon)?;
    // Landmarks play no part in turn prediction.
    let bare = PathShape { map_points: 0, ..shape.clone() };
    let reports = seeds
        .into_iter()
        .map(|seed| {
            let map = generate_synthetic_map(&bare, noise_sigma, seed)?;
            next_step_accuracy(&map, &labels, cfg)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let (mean, stddev) = mean_stddev(reports.iter().map(|r| r.accuracy_percent));
    Ok(MonteCarloSummary {
        shape: shape.kind.to_string(),
        noise_sigma,
        reports,
        mean_percent: mean,
        stddev_percent: stddev,
    })
}

/// Sample mean and (population) standard deviation, folded in order.
pub fn mean_stddev(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.into_iter().collect();
    if v.is_empty() {
        return (0.0, 0.0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Overall accuracy across maps: `(weighted by keyframe count, unweighted mean)`.
pub fn overall_accuracy(reports: &[AccuracyReport]) -> (f64, f64) {
    let total: usize = reports.iter().map(|r| r.total).sum();
    let hits: usize = reports.iter().map(|r| r.true_positives).sum();
    let weighted = if total == 0 { 0.0 } else { 100.0 * hits as f64 / total as f64 };
    (weighted, mean_stddev(reports.iter().map(|r| r.accuracy_percent)).0)
}

pub const REPORT_CSV_HEADER: &str = "map_name,total,true_positives,accuracy_percent";

pub fn reports_to_csv(reports: &[AccuracyReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{:.2}\n", r.map_name, r.total, r.true_positives, r.accuracy_percent));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::synth::{ShapeKind, Turn};

    #[test]
    fn straight_labels_are_all_straight() {
        let labels = label_shape(&PathShape::preset(ShapeKind::Straight), 5, 1e-6).unwrap();
        assert_eq!(labels.len(), 45);
        assert!(labels.iter().all(|l| l.label == Direction::Straight));
    }

    #[test]
    fn square_labels_turn_left_only_near_corners() {
        let shape = PathShape::preset(ShapeKind::Square);
        let labels = label_shape(&shape, 5, 1e-6).unwrap();
        assert_eq!(labels.len(), 108);
        // Corners sit at keyframes 28, 56 and 84. Keyframe i looks at i+1 and
        // i+5, so it turns when i+1 < corner < i+5 or i+1 == corner.
        for l in &labels {
            let i = l.keyframe_id as i64;
            let spans = [28i64, 56, 84].iter().any(|&c| c > i && c < i + 5);
            let expected = if spans { Direction::Left } else { Direction::Straight };
            assert_eq!(l.label, expected, "keyframe {i}");
        }
    }

    #[test]
    fn right_turning_shape_labels_right() {
        let shape = PathShape { turn: Turn::Right, ..PathShape::preset(ShapeKind::LShaped) };
        let labels = label_shape(&shape, 5, 1e-6).unwrap();
        assert!(labels.iter().any(|l| l.label == Direction::Right));
        assert!(labels.iter().all(|l| l.label != Direction::Left));
    }

    #[test]
    fn lookahead_longer_than_route_gives_no_labels() {
        assert!(label_shape(&PathShape::preset(ShapeKind::Straight), 60, 1e-6).unwrap().is_empty());
    }

    #[test]
    fn noiseless_maps_score_perfectly() {
        let cfg = GuidanceConfig::default();
        for kind in ShapeKind::ALL {
            let shape = PathShape::preset(kind);
            let map = generate_synthetic_map(&shape, 0.0, 3).unwrap();
            let labels = label_shape(&shape, cfg.lookahead, cfg.colinear_epsilon).unwrap();
            let r = next_step_accuracy(&map, &labels, &cfg).unwrap();
            assert_eq!(r.accuracy_percent, 100.0, "{kind}");
        }
    }

    #[test]
    fn empty_labels_error() {
        let map = generate_synthetic_map(&PathShape::preset(ShapeKind::Straight), 0.0, 0).unwrap();
        assert_eq!(next_step_accuracy(&map, &[], &GuidanceConfig::default()), Err(EvaluationError::EmptyLabels));
    }

    #[test]
    fn overall_means() {
        let reports = vec![AccuracyReport::new("a", 10, 10), AccuracyReport::new("b", 30, 15)];
        let (w, u) = overall_accuracy(&reports);
        assert!((w - 62.5).abs() < 1e-12);
        assert!((u - 75.0).abs() < 1e-12);
    }

    #[test]
    fn csv_shape() {
        let csv = reports_to_csv(&[AccuracyReport::new("m", 8, 6)]);
        assert_eq!(csv, "map_name,total,true_positives,accuracy_percent\nm,8,6,75.00\n");
    }
}
