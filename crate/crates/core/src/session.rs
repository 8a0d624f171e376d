//! Per-frame guidance pipeline.
//!
//! A [`Session`] owns one stream of frames against one map. Each tracked
//! frame in [`SessionMode::Online`] goes through three stages: detections are
//! anchored to map points and their distances checked, the camera's distance
//! from the route is checked, and the turn toward the keyframe `K` steps past
//! the nearest one is predicted. Alerts use hysteresis: an alert raised at a
//! threshold is only released once the quantity moves 10% back past it.

use crate::calibration::ScaleCalibration;
use crate::guidance::{
    anchor_obstacle, lookahead_index, nearest_keyframe, next_step, obstacle_distance, path_deviation, proximity_alert,
    CameraIntrinsics, Direction, GuidanceConfig, GuidanceError,
};
use crate::model::{validate_map, FrameInput, PointLabel, Violation, WorldMap};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use thiserror::Error;

/// Fraction of a threshold the quantity must cross back over to clear an alert.
pub const RELEASE_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionMode {
    /// Localization status only.
    Offline,
    /// Full guidance.
    Online,
}

#[derive(Debug, Error, PartialEq)]
pub enum SessionError {
    #[error("map has no scale reference; online guidance needs one")]
    MissingCalibration,
    #[error("invalid map: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidMap(Vec<Violation>),
    #[error(transparent)]
    InvalidConfig(GuidanceError),
    #[error("frame {frame} does not follow frame {last}")]
    OutOfOrderFrame { frame: u64, last: u64 },
}

/// Alert that is raised when a value goes past `raise` and cleared when it
/// comes back past `release`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Latch {
    raise: f64,
    release: f64,
    active: bool,
}

impl Latch {
    /// Raised strictly above `threshold`, released strictly below 0.9 of it.
    fn above(threshold: f64) -> Self {
        Self { raise: threshold, release: threshold * RELEASE_FACTOR, active: false }
    }

    /// Raised strictly below `threshold`, released strictly above `threshold / 0.9`.
    fn below(threshold: f64) -> Self {
        Self { raise: threshold, release: threshold / RELEASE_FACTOR, active: false }
    }

    fn is_upper(&self) -> bool {
        self.release < self.raise
    }

    fn update(&mut self, value: f64, raised_now: bool) -> bool {
        if self.active {
            let cleared = if self.is_upper() { value < self.release } else { value > self.release };
            if cleared {
                self.active = false;
            }
        } else if raised_now {
            self.active = true;
        }
        self.active
    }
}

/// A detection anchored to a map point, tracked for the rest of the session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleRecord {
    pub point_id: u64,
    pub class_name: String,
    pub first_seen_frame: u64,
    pub last_distance_cm: f64,
    pub alert_active: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObstacleCue {
    pub point_id: u64,
    pub class_name: String,
    pub distance_cm: f64,
    pub alert: bool,
}

/// Guidance fields present in online mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cues {
    pub direction: Direction,
    pub deviation_cm: f64,
    pub deviation_alert: bool,
    pub obstacles: Vec<ObstacleCue>,
    pub messages: Vec<String>,
}

/// What the pipeline emits for one frame. Offline sessions carry only the
/// frame index and localization status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceOutput {
    pub frame: u64,
    pub localized: bool,
    #[serde(flatten)]
    pub cues: Option<Cues>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl GuidanceOutput {
    pub fn direction(&self) -> Option<Direction> {
        self.cues.as_ref().map(|c| c.direction)
    }

    pub fn deviation_alert(&self) -> bool {
        self.cues.as_ref().is_some_and(|c| c.deviation_alert)
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("guidance output is always representable")
    }
}

pub const MSG_TRACKING_LOST: &str = "tracking lost, hold position";
pub const MSG_RETURN_TO_PATH: &str = "return to the path";

fn direction_message(d: Direction) -> &'static str {
    match d {
        Direction::Left => "go left",
        Direction::Right => "go right",
        Direction::Straight => "go straight",
    }
}

/// One logical stream of frames against one map. `process_frame` takes
/// `&mut self`, so a session has a single writer by construction.
#[derive(Debug, Clone)]
pub struct Session {
    map: Arc<WorldMap>,
    cfg: GuidanceConfig,
    mode: SessionMode,
    calib: Option<ScaleCalibration>,
    intrinsics: Option<CameraIntrinsics>,
    last_frame: Option<u64>,
    registry: BTreeMap<u64, (ObstacleRecord, Latch)>,
    objects: BTreeSet<u64>,
    deviation: Latch,
    last_deviation_cm: f64,
}

impl Session {
    pub fn start(map: impl Into<Arc<WorldMap>>, cfg: GuidanceConfig, mode: SessionMode) -> Result<Self, SessionError> {
        let map = map.into();
        let violations = validate_map(&map);
        if !violations.is_empty() {
            return Err(SessionError::InvalidMap(violations));
        }
        cfg.validate().map_err(SessionError::InvalidConfig)?;
        let calib = match (ScaleCalibration::from_map(&map), mode) {
            (Ok(c), _) => Some(c),
            (Err(_), SessionMode::Offline) => None,
            (Err(_), SessionMode::Online) => return Err(SessionError::MissingCalibration),
        };
        Ok(Self {
            map,
            cfg,
            mode,
            calib,
            intrinsics: None,
            last_frame: None,
            registry: BTreeMap::new(),
            objects: BTreeSet::new(),
            deviation: Latch::above(cfg.deviation_threshold_cm),
            last_deviation_cm: 0.0,
        })
    }

    /// Intrinsics used to project map points when a frame has no observations.
    pub fn with_intrinsics(mut self, intr: CameraIntrinsics) -> Self {
        self.intrinsics = Some(intr);
        self
    }

    pub fn map(&self) -> &Arc<WorldMap> {
        &self.map
    }

    pub fn config(&self) -> &GuidanceConfig {
        &self.cfg
    }

    pub fn mode(&self) -> SessionMode {
        self.mode
    }

    pub fn calibration(&self) -> Option<&ScaleCalibration> {
        self.calib.as_ref()
    }

    pub fn last_frame(&self) -> Option<u64> {
        self.last_frame
    }

    pub fn obstacles(&self) -> impl Iterator<Item = &ObstacleRecord> {
        self.registry.values().map(|(r, _)| r)
    }

    /// Ids of map points labeled as objects, ascending.
    pub fn object_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.objects.iter().copied()
    }

    pub fn label_of(&self, point_id: u64) -> Option<PointLabel> {
        self.map.point(point_id).map(|_| {
            if self.objects.contains(&point_id) {
                PointLabel::Object
            } else {
                PointLabel::Generic
            }
        })
    }

    /// Copy of the session map with object labels applied.
    pub fn labeled_map(&self) -> WorldMap {
        let mut m = (*self.map).clone();
        for p in &mut m.map_points {
            if self.objects.contains(&p.id) {
                p.label = PointLabel::Object;
            }
        }
        m
    }

    pub fn process_frame(&mut self, input: &FrameInput) -> Result<GuidanceOutput, SessionError> {
        if let Some(last) = self.last_frame {
            if input.frame <= last {
                return Err(SessionError::OutOfOrderFrame { frame: input.frame, last });
            }
        }
        self.last_frame = Some(input.frame);

        if self.mode == SessionMode::Offline {
            return Ok(GuidanceOutput {
                frame: input.frame,
                localized: input.tracked,
                cues: None,
                warnings: Vec::new(),
            });
        }
        if !input.tracked {
            return Ok(self.carry_over(input.frame));
        }
        let calib = self.calib.expect("online sessions always hold a calibration");
        let camera = input.pose.position;
        let mut warnings = Vec::new();

        // Obstacles: anchor new detections, then re-measure everything registered.
        for det in &input.detections {
            match anchor_obstacle(input, &self.map, det, self.intrinsics.as_ref()) {
                Ok(id) => {
                    self.objects.insert(id);
                    self.registry.entry(id).and_modify(|(r, _)| r.class_name = det.class_name.clone()).or_insert_with(
                        || {
                            let record = ObstacleRecord {
                                point_id: id,
                                class_name: det.class_name.clone(),
                                first_seen_frame: input.frame,
                                last_distance_cm: f64::INFINITY,
                                alert_active: false,
                            };
                            (record, Latch::below(self.cfg.obstacle_threshold_cm))
                        },
                    );
                }
                Err(e) => warnings.push(format!("detection `{}`: {e}", det.class_name)),
            }
        }
        for (id, (record, latch)) in self.registry.iter_mut() {
            let point = self.map.point(*id).expect("registered obstacles are map points");
            let d = obstacle_distance(&camera, &point.position);
            let raised = proximity_alert(d, Some(&calib), &self.cfg).expect("calibration present");
            record.last_distance_cm = calib.map_to_cm(d).expect("distances are non-negative");
            record.alert_active = latch.update(record.last_distance_cm, raised);
        }

        // Route deviation.
        let deviation_map = path_deviation(&self.map, &camera).expect("validated maps have a path");
        let deviation_cm = calib.map_to_cm(deviation_map).expect("distances are non-negative");
        self.deviation.update(deviation_cm, deviation_cm > self.cfg.deviation_threshold_cm);
        self.last_deviation_cm = deviation_cm;

        // Next step.
        let (nearest, _) = nearest_keyframe(&self.map, &camera).expect("validated maps have keyframes");
        let ahead = lookahead_index(nearest, self.cfg.lookahead, self.map.keyframes.len());
        let direction = match next_step(
            &camera,
            &self.map.keyframes[nearest].center(),
            &self.map.keyframes[ahead].center(),
            &self.cfg,
        ) {
            Ok(d) => d,
            Err(e) => {
                warnings.push(e.to_string());
                Direction::Straight
            }
        };

        let mut out = self.render(input.frame, true, direction);
        out.warnings = warnings;
        Ok(out)
    }

    fn carry_over(&self, frame: u64) -> GuidanceOutput {
        self.render(frame, false, Direction::Straight)
    }

    fn render(&self, frame: u64, localized: bool, direction: Direction) -> GuidanceOutput {
        let mut obstacles: Vec<ObstacleCue> = self
            .registry
            .values()
            .filter(|(r, _)| r.last_distance_cm.is_finite())
            .map(|(r, _)| ObstacleCue {
                point_id: r.point_id,
                class_name: r.class_name.clone(),
                distance_cm: r.last_distance_cm,
                alert: r.alert_active,
            })
            .collect();
        obstacles.sort_by(|a, b| a.distance_cm.total_cmp(&b.distance_cm).then(a.point_id.cmp(&b.point_id)));

        let mut messages = Vec::new();
        if !localized {
            messages.push(MSG_TRACKING_LOST.to_string());
        }
        if self.deviation.active {
            messages.push(MSG_RETURN_TO_PATH.to_string());
        }
        for o in obstacles.iter().filter(|o| o.alert) {
            messages.push(format!("obstacle ahead: {} at {:.0} cm", o.class_name, o.distance_cm));
        }
        if localized {
            messages.push(direction_message(direction).to_string());
        }

        GuidanceOutput {
            frame,
            localized,
            cues: Some(Cues {
                direction,
                deviation_cm: self.last_deviation_cm,
                deviation_alert: self.deviation.active,
                obstacles,
                messages,
            }),
            warnings: Vec::new(),
        }
    }
}

/// Runs every frame through `session`, stopping at the first error.
pub fn run_replay(session: &mut Session, frames: &[FrameInput]) -> Result<Vec<GuidanceOutput>, SessionError> {
    frames.iter().map(|f| session.process_frame(f)).collect()
}
