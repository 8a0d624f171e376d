//! Synthetic route maps.
//!
//! Every route starts at the origin heading `+Z` and is a chain of straight
//! segments joined by 90° turns, all in the same direction. Keyframes are
//! laid at a fixed arc-length spacing and then pushed sideways by Gaussian
//! noise. The noise draws are standard normals scaled by `noise_sigma`, so two
//! maps from the same seed differ only in noise amplitude.

use crate::calibration::ScaleCalibration;
use crate::guidance::PlanarVector;
use crate::model::{CheckPoint, KeyFrame, MapPoint, Point3, PointLabel, Pose, WorldMap};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Straight,
    LShaped,
    UShaped,
    Square,
}

impl ShapeKind {
    pub const ALL: [ShapeKind; 4] = [ShapeKind::Straight, ShapeKind::LShaped, ShapeKind::UShaped, ShapeKind::Square];

    pub fn segment_count(&self) -> usize {
        match self {
            ShapeKind::Straight => 1,
            ShapeKind::LShaped => 2,
            ShapeKind::UShaped => 3,
            ShapeKind::Square => 4,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            ShapeKind::Straight => "straight",
            ShapeKind::LShaped => "l_shaped",
            ShapeKind::UShaped => "u_shaped",
            ShapeKind::Square => "square",
        }
    }
}

impl fmt::Display for ShapeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ShapeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "straight" => Ok(ShapeKind::Straight),
            "l" | "l_shaped" => Ok(ShapeKind::LShaped),
            "u" | "u_shaped" => Ok(ShapeKind::UShaped),
            "square" => Ok(ShapeKind::Square),
            other => Err(format!("unknown shape `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Turn {
    Left,
    Right,
}

#[derive(Debug, Error, PartialEq)]
pub enum ShapeError {
    #[error("{kind} needs {expected} segment lengths, got {got}")]
    SegmentCount { kind: ShapeKind, expected: usize, got: usize },
    #[error("segment lengths and spacing must be positive and finite")]
    NonPositive,
    #[error("noise sigma must be non-negative and finite")]
    NegativeNoise,
    #[error("route is shorter than one keyframe spacing")]
    TooShort,
}

/// Route geometry in map units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathShape {
    pub kind: ShapeKind,
    pub segment_lengths: Vec<f64>,
    pub spacing: f64,
    pub turn: Turn,
    /// Centimeters per 0.1 map units recorded on generated maps.
    pub reference_cm: f64,
    pub map_points: usize,
}

impl PathShape {
    /// Desk-scale defaults: keyframe spacing 0.025 units, keyframe and map
    /// point counts of a typical hand-held mapping run (50, 61, 108 and 113
    /// keyframes), left turns.
    pub fn preset(kind: ShapeKind) -> Self {
        const SPACING: f64 = 0.025;
        let (steps, reference_cm, map_points): (&[u32], f64, usize) = match kind {
            ShapeKind::Straight => (&[49], 68.9, 4770),
            ShapeKind::LShaped => (&[30, 30], 74.6, 5498),
            ShapeKind::UShaped => (&[36, 35, 36], 66.6, 10498),
            ShapeKind::Square => (&[28, 28, 28, 28], 64.5, 9743),
        };
        Self {
            kind,
            segment_lengths: steps.iter().map(|&n| n as f64 * SPACING).collect(),
            spacing: SPACING,
            turn: Turn::Left,
            reference_cm,
            map_points,
        }
    }

    pub fn validate(&self) -> Result<(), ShapeError> {
        let expected = self.kind.segment_count();
        if self.segment_lengths.len() != expected {
            return Err(ShapeError::SegmentCount { kind: self.kind, expected, got: self.segment_lengths.len() });
        }
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.spacing) || !self.segment_lengths.iter().all(|&l| ok(l)) || !ok(self.reference_cm) {
            return Err(ShapeError::NonPositive);
        }
        if self.total_length() < self.spacing {
            return Err(ShapeError::TooShort);
        }
        Ok(())
    }

    pub fn total_length(&self) -> f64 {
        self.segment_lengths.iter().sum()
    }

    /// Polyline corners, starting at the origin.
    pub fn vertices(&self) -> Vec<PlanarVector> {
        let mut heading = PlanarVector::new(0.0, 1.0);
        let mut at = PlanarVector::new(0.0, 0.0);
        let mut out = vec![at];
        for &len in &self.segment_lengths {
            at = PlanarVector::new(at.x + heading.x * len, at.z + heading.z * len);
            out.push(at);
            heading = match self.turn {
                // Facing (x, z), left is (-z, x) in plan view.
                Turn::Left => PlanarVector::new(-heading.z, heading.x),
                Turn::Right => PlanarVector::new(heading.z, -heading.x),
            };
        }
        out
    }

    pub fn keyframe_count(&self) -> usize {
        (self.total_length() / self.spacing * (1.0 + 1e-12)).floor() as usize + 1
    }

    /// Position, unit heading and segment index at arc length `s`.
    fn locate(&self, vertices: &[PlanarVector], s: f64) -> (PlanarVector, PlanarVector, usize) {
        let mut start = 0.0;
        let last = self.segment_lengths.len() - 1;
        for (i, &len) in self.segment_lengths.iter().enumerate() {
            if s < start + len || i == last {
                let (a, b) = (vertices[i], vertices[i + 1]);
                let dir = PlanarVector::new((b.x - a.x) / len, (b.z - a.z) / len);
                let t = (s - start).clamp(0.0, len);
                return (PlanarVector::new(a.x + dir.x * t, a.z + dir.z * t), dir, i);
            }
            start += len;
        }
        unreachable!("shape has at least one segment")
    }

    /// Noise-free keyframe centers.
    pub fn ideal_keyframes(&self) -> Vec<PlanarVector> {
        let vertices = self.vertices();
        (0..self.keyframe_count()).map(|k| self.locate(&vertices, k as f64 * self.spacing).0).collect()
    }
}

fn yaw_of(dir: &PlanarVector) -> f64 {
    dir.x.atan2(dir.z)
}

/// Builds a calibrated map for `shape` with lateral keyframe noise of
/// standard deviation `noise_sigma` map units. Identical inputs give
/// identical maps.
pub fn generate_synthetic_map(shape: &PathShape, noise_sigma: f64, seed: u64) -> Result<WorldMap, ShapeError> {
    shape.validate()?;
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(ShapeError::NegativeNoise);
    }
    let vertices = shape.vertices();
    let total = shape.total_length();

    let mut noise_rng = ChaCha8Rng::seed_from_u64(seed);
    let keyframes = (0..shape.keyframe_count())
        .map(|k| {
            let (at, dir, _) = shape.locate(&vertices, k as f64 * shape.spacing);
            let z: f64 = StandardNormal.sample(&mut noise_rng);
            let offset = noise_sigma * z;
            // Lateral unit vector (to the right of travel).
            let right = PlanarVector::new(dir.z, -dir.x);
            let center = Point3::new(at.x + right.x * offset, 0.0, at.z + right.z * offset);
            KeyFrame { id: k as u64, timestamp: k as f64 * 0.4, pose: Pose::from_yaw(center, yaw_of(&dir)) }
        })
        .collect();

    // Landmarks use their own stream so they do not move with the noise level.
    let mut point_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let map_points = (0..shape.map_points)
        .map(|id| {
            let s = point_rng.random_range(0.0..total);
            let (at, dir, _) = shape.locate(&vertices, s);
            let side = if point_rng.random_bool(0.5) { 1.0 } else { -1.0 };
            let lateral = side * point_rng.random_range(0.08..0.35);
            let height = point_rng.random_range(-0.25..0.15);
            let right = PlanarVector::new(dir.z, -dir.x);
            MapPoint {
                id: id as u64,
                position: Point3::new(at.x + right.x * lateral, height, at.z + right.z * lateral),
                label: PointLabel::Generic,
            }
        })
        .collect();

    let calib = ScaleCalibration::new(shape.reference_cm).map_err(|_| ShapeError::NonPositive)?;
    let checkpoints = vertices
        .windows(2)
        .zip(shape.segment_lengths.iter())
        .enumerate()
        .map(|(i, (w, &len))| CheckPoint {
            label: ((b'A' + i as u8) as char).to_string(),
            endpoint_a: Point3::new(w[0].x, 0.0, w[0].z),
            endpoint_b: Point3::new(w[1].x, 0.0, w[1].z),
            actual_cm: calib.map_to_cm(len).expect("segment lengths are positive"),
        })
        .collect();

    let mut map = WorldMap::new(format!("synthetic-{}-seed{seed}", shape.kind), keyframes);
    map.scale_reference_cm = Some(shape.reference_cm);
    map.map_points = map_points;
    map.checkpoints = checkpoints;
    Ok(map)
}
