//! Loading, validation and canonical persistence of maps and replays.

use super::canonical::to_canonical_string;
use super::{
    CheckPoint, Detection, FrameInput, KeyFrame, MapPoint, OrbParams, Point3, PointLabel, Pose, Quaternion, WorldMap,
    FORMAT_VERSION,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use thiserror::Error;

const QUATERNION_NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    UnsupportedVersion,
    TooFewKeyframes,
    DuplicateKeyframeId,
    NonIncreasingTimestamp,
    DuplicateMapPointId,
    NonFiniteCoordinate,
    NonUnitQuaternion,
    NonPositiveScale,
    NonPositiveCheckpointDistance,
    InvalidDetection,
}

impl ViolationCode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ViolationCode::UnsupportedVersion => "unsupported_version",
            ViolationCode::TooFewKeyframes => "too_few_keyframes",
            ViolationCode::DuplicateKeyframeId => "duplicate_keyframe_id",
            ViolationCode::NonIncreasingTimestamp => "non_increasing_timestamp",
            ViolationCode::DuplicateMapPointId => "duplicate_map_point_id",
            ViolationCode::NonFiniteCoordinate => "non_finite_coordinate",
            ViolationCode::NonUnitQuaternion => "non_unit_quaternion",
            ViolationCode::NonPositiveScale => "non_positive_scale",
            ViolationCode::NonPositiveCheckpointDistance => "non_positive_checkpoint_distance",
            ViolationCode::InvalidDetection => "invalid_detection",
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One broken invariant, located by a JSON-pointer-like path.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub code: ViolationCode,
    pub path: String,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, path: path.into(), message: message.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.code, self.path, self.message)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum LoadError {
    #[error("malformed document{}: {message}", line_suffix(*.line))]
    MalformedDocument { line: Option<usize>, message: String },
    #[error("schema violation{} at {path}: {message}", line_suffix(*.line))]
    SchemaViolation { line: Option<usize>, path: String, message: String },
    #[error("invariant violation{}: {violation}", line_suffix(*.line))]
    InvariantViolation { line: Option<usize>, violation: Violation },
    #[error("frame index {frame} on line {line} does not follow {previous}")]
    NonMonotonicFrames { line: usize, frame: u64, previous: u64 },
    #[error("frame {frame} observes unknown map point {point_id}")]
    BindingError { frame: u64, point_id: u64 },
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" on line {l}")).unwrap_or_default()
}

// On-disk shapes. Unknown fields are ignored.

#[derive(Serialize, Deserialize)]
struct MapDoc {
    format_version: u32,
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scale_reference_cm: Option<f64>,
    #[serde(default)]
    orb_params: OrbParams,
    keyframes: Vec<KeyFrameDoc>,
    #[serde(default)]
    map_points: Vec<MapPointDoc>,
    #[serde(default)]
    checkpoints: Vec<CheckPointDoc>,
}

#[derive(Serialize, Deserialize)]
struct KeyFrameDoc {
    id: u64,
    timestamp: f64,
    position: Point3,
    orientation_wxyz: Quaternion,
}

#[derive(Serialize, Deserialize)]
struct MapPointDoc {
    id: u64,
    position: Point3,
    #[serde(default)]
    label: PointLabel,
}

#[derive(Serialize, Deserialize)]
struct CheckPointDoc {
    label: String,
    endpoint_a: Point3,
    endpoint_b: Point3,
    actual_cm: f64,
}

impl From<&WorldMap> for MapDoc {
    fn from(m: &WorldMap) -> Self {
        MapDoc {
            format_version: m.format_version,
            name: m.name.clone(),
            scale_reference_cm: m.scale_reference_cm,
            orb_params: m.orb_params,
            keyframes: m
                .keyframes
                .iter()
                .map(|k| KeyFrameDoc {
                    id: k.id,
                    timestamp: k.timestamp,
                    position: k.pose.position,
                    orientation_wxyz: k.pose.orientation,
                })
                .collect(),
            map_points: m
                .map_points
                .iter()
                .map(|p| MapPointDoc { id: p.id, position: p.position, label: p.label })
                .collect(),
            checkpoints: m
                .checkpoints
                .iter()
                .map(|c| CheckPointDoc {
                    label: c.label.clone(),
                    endpoint_a: c.endpoint_a,
                    endpoint_b: c.endpoint_b,
                    actual_cm: c.actual_cm,
                })
                .collect(),
        }
    }
}

impl From<MapDoc> for WorldMap {
    fn from(d: MapDoc) -> Self {
        WorldMap {
            name: d.name,
            format_version: d.format_version,
            scale_reference_cm: d.scale_reference_cm,
            orb_params: d.orb_params,
            keyframes: d
                .keyframes
                .into_iter()
                .map(|k| KeyFrame { id: k.id, timestamp: k.timestamp, pose: Pose::new(k.position, k.orientation_wxyz) })
                .collect(),
            map_points: d
                .map_points
                .into_iter()
                .map(|p| MapPoint { id: p.id, position: p.position, label: p.label })
                .collect(),
            checkpoints: d
                .checkpoints
                .into_iter()
                .map(|c| CheckPoint {
                    label: c.label,
                    endpoint_a: c.endpoint_a,
                    endpoint_b: c.endpoint_b,
                    actual_cm: c.actual_cm,
                })
                .collect(),
        }
    }
}

fn parse_document<T: DeserializeOwned>(text: &str, line: Option<usize>) -> Result<T, LoadError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LoadError::MalformedDocument { line, message: e.to_string() })?;
    serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        LoadError::SchemaViolation { line, path, message: e.into_inner().to_string() }
    })
}

/// Parses and validates a map document.
pub fn load_map(bytes: &[u8]) -> Result<WorldMap, LoadError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| LoadError::MalformedDocument { line: None, message: e.to_string() })?;
    let doc: MapDoc = parse_document(text, None)?;
    let map = WorldMap::from(doc);
    match validate_map(&map).into_iter().next() {
        Some(violation) => Err(LoadError::InvariantViolation { line: None, violation }),
        None => Ok(map),
    }
}

/// Canonical, byte-stable serialization of a map.
pub fn save_map(map: &WorldMap) -> Vec<u8> {
    let value = serde_json::to_value(MapDoc::from(map)).expect("map document is always representable");
    to_canonical_string(&value).into_bytes()
}

fn check_point3(out: &mut Vec<Violation>, p: &Point3, path: String) {
    if !p.is_finite() {
        out.push(Violation::new(ViolationCode::NonFiniteCoordinate, path, "coordinate is not finite"));
    }
}

fn check_pose(out: &mut Vec<Violation>, pose: &Pose, path: &str) {
    check_point3(out, &pose.position, format!("{path}/position"));
    let q = &pose.orientation;
    if !q.is_finite() {
        out.push(Violation::new(
            ViolationCode::NonFiniteCoordinate,
            format!("{path}/orientation_wxyz"),
            "quaternion is not finite",
        ));
    } else if (q.norm() - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
        out.push(Violation::new(
            ViolationCode::NonUnitQuaternion,
            format!("{path}/orientation_wxyz"),
            format!("quaternion norm {} is not 1", q.norm()),
        ));
    }
}

/// Lists every broken invariant; empty when the map is valid.
pub fn validate_map(map: &WorldMap) -> Vec<Violation> {
    use ViolationCode::*;
    let mut out = Vec::new();

    if map.format_version != FORMAT_VERSION {
        out.push(Violation::new(
            UnsupportedVersion,
            "/format_version",
            format!("expected {FORMAT_VERSION}, found {}", map.format_version),
        ));
    }
    if map.keyframes.len() < 2 {
        out.push(Violation::new(
            TooFewKeyframes,
            "/keyframes",
            format!("a path needs at least 2 keyframes, found {}", map.keyframes.len()),
        ));
    }
    if let Some(s) = map.scale_reference_cm {
        if !(s.is_finite() && s > 0.0) {
            out.push(Violation::new(NonPositiveScale, "/scale_reference_cm", format!("{s} is not positive")));
        }
    }
    let o = &map.orb_params;
    if !o.scale_factor.is_finite() {
        out.push(Violation::new(NonFiniteCoordinate, "/orb_params/scale_factor", "scale factor is not finite"));
    }

    let mut seen = HashSet::new();
    for (i, kf) in map.keyframes.iter().enumerate() {
        let path = format!("/keyframes/{i}");
        if !seen.insert(kf.id) {
            out.push(Violation::new(
                DuplicateKeyframeId,
                format!("{path}/id"),
                format!("keyframe id {} repeats", kf.id),
            ));
        }
        if !kf.timestamp.is_finite() {
            out.push(Violation::new(NonFiniteCoordinate, format!("{path}/timestamp"), "timestamp is not finite"));
        } else if i > 0 && map.keyframes[i - 1].timestamp.is_finite() && kf.timestamp <= map.keyframes[i - 1].timestamp
        {
            out.push(Violation::new(
                NonIncreasingTimestamp,
                format!("{path}/timestamp"),
                format!("{} does not follow {}", kf.timestamp, map.keyframes[i - 1].timestamp),
            ));
        }
        check_pose(&mut out, &kf.pose, &path);
    }

    let mut seen = HashSet::new();
    for (i, p) in map.map_points.iter().enumerate() {
        if !seen.insert(p.id) {
            out.push(Violation::new(
                DuplicateMapPointId,
                format!("/map_points/{i}/id"),
                format!("map point id {} repeats", p.id),
            ));
        }
        check_point3(&mut out, &p.position, format!("/map_points/{i}/position"));
    }

    for (i, c) in map.checkpoints.iter().enumerate() {
        check_point3(&mut out, &c.endpoint_a, format!("/checkpoints/{i}/endpoint_a"));
        check_point3(&mut out, &c.endpoint_b, format!("/checkpoints/{i}/endpoint_b"));
        if !(c.actual_cm.is_finite() && c.actual_cm > 0.0) {
            out.push(Violation::new(
                NonPositiveCheckpointDistance,
                format!("/checkpoints/{i}/actual_cm"),
                format!("{} is not a positive distance", c.actual_cm),
            ));
        }
    }
    out
}

fn validate_frame(frame: &FrameInput) -> Vec<Violation> {
    let mut out = Vec::new();
    if !frame.timestamp.is_finite() {
        out.push(Violation::new(ViolationCode::NonFiniteCoordinate, "/timestamp", "timestamp is not finite"));
    }
    check_pose(&mut out, &frame.pose, "/pose");
    for (i, o) in frame.observations.iter().enumerate() {
        if !(o.pixel[0].is_finite() && o.pixel[1].is_finite()) {
            out.push(Violation::new(
                ViolationCode::NonFiniteCoordinate,
                format!("/observations/{i}/pixel"),
                "pixel is not finite",
            ));
        }
    }
    for (i, d) in frame.detections.iter().enumerate() {
        if let Some(msg) = detection_problem(d) {
            out.push(Violation::new(ViolationCode::InvalidDetection, format!("/detections/{i}"), msg));
        }
    }
    out
}

/// Describes why a detection is unusable, if it is.
pub fn detection_problem(d: &Detection) -> Option<String> {
    let [u, v] = d.bbox_center;
    let [w, h] = d.bbox_size;
    if !(u.is_finite() && v.is_finite()) {
        Some("bounding box center is not finite".into())
    } else if !(w.is_finite() && h.is_finite() && w > 0.0 && h > 0.0) {
        Some(format!("bounding box size {w}x{h} must be positive"))
    } else if !(0.0..=1.0).contains(&d.confidence) {
        Some(format!("confidence {} outside [0, 1]", d.confidence))
    } else {
        None
    }
}

/// Parses a newline-delimited replay, one frame document per line.
///
/// Blank lines and lines starting with `#` are skipped. Line numbers in
/// errors are 1-based.
pub fn load_replay(bytes: &[u8]) -> Result<Vec<FrameInput>, LoadError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| LoadError::MalformedDocument { line: None, message: e.to_string() })?;
    let mut frames: Vec<FrameInput> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let frame: FrameInput = parse_document(trimmed, Some(line))?;
        if let Some(violation) = validate_frame(&frame).into_iter().next() {
            return Err(LoadError::InvariantViolation { line: Some(line), violation });
        }
        if let Some(prev) = frames.last() {
            if frame.frame <= prev.frame {
                return Err(LoadError::NonMonotonicFrames { line, frame: frame.frame, previous: prev.frame });
            }
        }
        frames.push(frame);
    }
    Ok(frames)
}

/// Serializes frames in the replay format, one compact document per line.
pub fn save_replay(frames: &[FrameInput]) -> Vec<u8> {
    let mut out = Vec::new();
    for f in frames {
        serde_json::to_writer(&mut out, f).expect("frame is always representable");
        out.push(b'\n');
    }
    out
}

/// Checks that every observation in `frames` refers to a point of `map`.
pub fn bind_replay(map: &WorldMap, frames: &[FrameInput]) -> Result<(), LoadError> {
    let ids: HashSet<u64> = map.map_points.iter().map(|p| p.id).collect();
    for f in frames {
        if let Some(o) = f.observations.iter().find(|o| !ids.contains(&o.point_id)) {
            return Err(LoadError::BindingError { frame: f.frame, point_id: o.point_id });
        }
    }
    Ok(())
}
