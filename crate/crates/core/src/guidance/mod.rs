//! Geometric guidance primitives.
//!
//! Everything in this module works in the ground plane: a map position
//! `(x, y, z)` is reduced to `(x, z)` before any distance or direction is
//! computed. Plan view puts `X` to the right and `Z` forward.

mod camera;
mod geometry;
mod obstacle;
mod path;

pub use camera::{project, unproject, CameraIntrinsics};
pub use geometry::{cross2d, next_step, normalized_cross, planar, planar_distance, PlanarVector};
pub use obstacle::{anchor_obstacle, obstacle_distance, proximity_alert};
pub use path::{lookahead_index, nearest_keyframe, path_deviation, point_segment_distance};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Right,
    Straight,
}

impl Direction {
    pub fn flipped(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
            Direction::Straight => Direction::Straight,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Left => "left",
            Direction::Right => "right",
            Direction::Straight => "straight",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the sign of the cross product maps to a turn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Positive cross product is a left turn in plan view (`X` right, `Z` forward).
    #[default]
    PlanView,
    /// Negative cross product means left and positive means right.
    PaperLiteral,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::PlanView => "plan_view",
            Orientation::PaperLiteral => "paper_literal",
        }
    }
}

impl FromStr for Orientation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plan_view" => Ok(Orientation::PlanView),
            "paper_literal" => Ok(Orientation::PaperLiteral),
            other => Err(format!("unknown orientation `{other}` (expected plan_view or paper_literal)")),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceConfig {
    pub deviation_threshold_cm: f64,
    pub obstacle_threshold_cm: f64,
    /// Number of keyframes past the nearest one that the direction targets.
    pub lookahead: usize,
    /// Tolerance on the sine of the angle between the two operands.
    pub colinear_epsilon: f64,
    pub orientation: Orientation,
}

impl Default for GuidanceConfig {
    fn default() -> Self {
        Self {
            deviation_threshold_cm: 60.0,
            obstacle_threshold_cm: 60.0,
            lookahead: 5,
            colinear_epsilon: 1e-6,
            orientation: Orientation::PlanView,
        }
    }
}

impl GuidanceConfig {
    pub fn validate(&self) -> Result<(), GuidanceError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.deviation_threshold_cm) || !positive(self.obstacle_threshold_cm) {
            return Err(GuidanceError::InvalidConfig("thresholds must be positive".into()));
        }
        if self.lookahead < 1 {
            return Err(GuidanceError::InvalidConfig("lookahead must be at least 1".into()));
        }
        if !(self.colinear_epsilon > 0.0 && self.colinear_epsilon < 1.0) {
            return Err(GuidanceError::InvalidConfig("colinear epsilon must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GuidanceError {
    #[error("camera coincides with a keyframe; direction is undefined")]
    DegenerateGeometry,
    #[error("map has no keyframes")]
    EmptyMap,
    #[error("path needs at least 2 keyframes")]
    TooFewKeyframes,
    #[error("no map point is visible in this frame")]
    NoVisiblePoints,
    #[error("map has no scale reference")]
    MissingCalibration,
    #[error("invalid guidance config: {0}")]
    InvalidConfig(String),
}
