//! Wire messages and the per-client state machine.
//!
//! The transport is irrelevant here: a [`ClientSession`] takes client
//! documents as text and returns the server documents to send back.

use crate::guidance::{planar, CameraIntrinsics, GuidanceConfig};
use crate::model::{detection_problem, Detection, FrameInput, Observation, Point3, Pose, WorldMap};
use crate::session::{GuidanceOutput, Session, SessionError, SessionMode};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Simulated camera rate used for synthesized timestamps.
pub const FRAME_RATE_HZ: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    /// Place the camera at an absolute map position, keeping its heading.
    Pose {
        x: f64,
        y: f64,
        z: f64,
    },
    /// Turn by `turn_deg` (positive is clockwise seen from above), then move
    /// `forward` map units along the new heading.
    Step {
        forward: f64,
        turn_deg: f64,
    },
    InjectDetection {
        class_name: String,
        bbox_center: [f64; 2],
        bbox_size: [f64; 2],
        confidence: f64,
    },
    // An empty struct variant so `deny_unknown_fields` also covers it.
    Reset {},
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub deviation_cm: f64,
    pub obstacle_cm: f64,
    pub lookahead: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Hello {
        map_name: String,
        keyframes: usize,
        map_points: usize,
        scale_reference_cm: f64,
        thresholds: Thresholds,
    },
    Guidance(GuidanceOutput),
    /// Plan-view (`[x, z]`) geometry for drawing.
    Map {
        keyframes: Vec<[f64; 2]>,
        map_points: Vec<[f64; 2]>,
        object_ids: Vec<u64>,
    },
    Error {
        code: String,
        detail: String,
    },
}

impl ServerMessage {
    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        ServerMessage::Error { code: code.to_string(), detail: detail.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages are always representable")
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ServerMessage::Hello { .. } => "hello",
            ServerMessage::Guidance(_) => "guidance",
            ServerMessage::Map { .. } => "map",
            ServerMessage::Error { .. } => "error",
        }
    }
}

/// One connected client: a virtual camera plus its own guidance session.
pub struct ClientSession {
    map: Arc<WorldMap>,
    cfg: GuidanceConfig,
    intrinsics: CameraIntrinsics,
    session: Session,
    position: Point3,
    yaw: f64,
    next_frame: u64,
}

impl ClientSession {
    pub fn new(map: Arc<WorldMap>, cfg: GuidanceConfig) -> Result<Self, SessionError> {
        let intrinsics = CameraIntrinsics::vga();
        let session = Session::start(Arc::clone(&map), cfg, SessionMode::Online)?.with_intrinsics(intrinsics);
        let (position, yaw) = start_pose(&map);
        Ok(Self { map, cfg, intrinsics, session, position, yaw, next_frame: 0 })
    }

    pub fn position(&self) -> Point3 {
        self.position
    }

    /// Heading in radians, clockwise from `+Z` seen from above.
    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    /// The `hello` and `map` messages sent on connect.
    pub fn greeting(&self) -> Vec<ServerMessage> {
        vec![
            ServerMessage::Hello {
                map_name: self.map.name.clone(),
                keyframes: self.map.keyframes.len(),
                map_points: self.map.map_points.len(),
                scale_reference_cm: self.map.scale_reference_cm.unwrap_or(f64::NAN),
                thresholds: Thresholds {
                    deviation_cm: self.cfg.deviation_threshold_cm,
                    obstacle_cm: self.cfg.obstacle_threshold_cm,
                    lookahead: self.cfg.lookahead,
                },
            },
            self.map_message(),
        ]
    }

    fn map_message(&self) -> ServerMessage {
        let xz = |p: Point3| {
            let v = planar(&p);
            [v.x, v.z]
        };
        ServerMessage::Map {
            keyframes: self.map.keyframe_centers().map(xz).collect(),
            map_points: self.map.map_points.iter().map(|p| xz(p.position)).collect(),
            object_ids: self.session.object_ids().collect(),
        }
    }

    /// Parses and handles one client document. Never fails: protocol errors
    /// come back as `error` messages and leave the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match serde_json::from_str::<ClientMessage>(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![ServerMessage::error("bad_message", e.to_string())],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Pose { x, y, z } => {
                if ![x, y, z].iter().all(|v| v.is_finite()) {
                    return vec![ServerMessage::error("bad_message", "pose coordinates must be finite")];
                }
                self.position = Point3::new(x, y, z);
                vec![self.step_frame(Vec::new())]
            }
            ClientMessage::Step { forward, turn_deg } => {
                if !(forward.is_finite() && turn_deg.is_finite()) {
                    return vec![ServerMessage::error("bad_message", "step values must be finite")];
                }
                self.yaw = wrap_angle(self.yaw + turn_deg.to_radians());
                let (s, c) = self.yaw.sin_cos();
                self.position =
                    Point3::new(self.position.x + forward * s, self.position.y, self.position.z + forward * c);
                vec![self.step_frame(Vec::new())]
            }
            ClientMessage::InjectDetection { class_name, bbox_center, bbox_size, confidence } => {
                let det = Detection { class_name, bbox_center, bbox_size, confidence };
                if let Some(problem) = detection_problem(&det) {
                    return vec![ServerMessage::error("bad_message", problem)];
                }
                let before = self.session.object_ids().count();
                let guidance = self.step_frame(vec![det]);
                let mut out = Vec::new();
                if let ServerMessage::Guidance(g) = &guidance {
                    if !g.warnings.is_empty() && self.session.object_ids().count() == before {
                        out.push(ServerMessage::error("no_visible_points", g.warnings.join("; ")));
                    }
                }
                out.push(guidance);
                if self.session.object_ids().count() != before {
                    out.push(self.map_message());
                }
                out
            }
            ClientMessage::Reset {} => {
                match Session::start(Arc::clone(&self.map), self.cfg, SessionMode::Online) {
                    Ok(s) => self.session = s.with_intrinsics(self.intrinsics),
                    Err(e) => return vec![ServerMessage::error("internal", e.to_string())],
                }
                let (position, yaw) = start_pose(&self.map);
                self.position = position;
                self.yaw = yaw;
                self.next_frame = 0;
                vec![self.step_frame(Vec::new()), self.map_message()]
            }
        }
    }

    fn synthesize_frame(&mut self, detections: Vec<Detection>) -> FrameInput {
        let pose = Pose::from_yaw(self.position, self.yaw);
        let (w, h) = self.intrinsics.image_size();
        let observations = self
            .map
            .map_points
            .iter()
            .filter_map(|p| {
                let px = crate::guidance::project(&self.intrinsics, &pose, &p.position)?;
                ((0.0..w).contains(&px[0]) && (0.0..h).contains(&px[1]))
                    .then_some(Observation { point_id: p.id, pixel: px })
            })
            .collect();
        let frame = self.next_frame;
        self.next_frame += 1;
        FrameInput { frame, timestamp: frame as f64 / FRAME_RATE_HZ, pose, tracked: true, observations, detections }
    }

    fn step_frame(&mut self, detections: Vec<Detection>) -> ServerMessage {
        let frame = self.synthesize_frame(detections);
        match self.session.process_frame(&frame) {
            Ok(out) => ServerMessage::Guidance(out),
            Err(e) => ServerMessage::error("internal", e.to_string()),
        }
    }

    /// Runs a frame at the current pose without moving; used by tests and
    /// latency probes.
    pub fn current_guidance(&mut self) -> Option<GuidanceOutput> {
        match self.step_frame(Vec::new()) {
            ServerMessage::Guidance(g) => Some(g),
            _ => None,
        }
    }
}

fn start_pose(map: &WorldMap) -> (Point3, f64) {
    let a = map.keyframes[0].center();
    let b = map.keyframes.iter().map(|k| k.center()).find(|c| planar(&c.sub(&a)).norm() > 0.0).unwrap_or(a);
    let d = planar(&b.sub(&a));
    (a, if d.norm() > 0.0 { d.x.atan2(d.z) } else { 0.0 })
}

fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let r = a.rem_euclid(two_pi);
    if r > std::f64::consts::PI {
        r - two_pi
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{generate_synthetic_map, PathShape, ShapeKind};
    use crate::Direction;

    fn straight_client() -> ClientSession {
        let map = generate_synthetic_map(&PathShape::preset(ShapeKind::Straight), 0.0, 1).unwrap();
        ClientSession::new(Arc::new(map), GuidanceConfig::default()).unwrap()
    }

    fn guidance(msgs: &[ServerMessage]) -> &GuidanceOutput {
        msgs.iter()
            .find_map(|m| if let ServerMessage::Guidance(g) = m { Some(g) } else { None })
            .expect("guidance message")
    }

    #[test]
    fn greeting_is_hello_then_map() {
        let c = straight_client();
        let kinds: Vec<_> = c.greeting().iter().map(|m| m.kind()).collect();
        assert_eq!(kinds, vec!["hello", "map"]);
        let hello = c.greeting()[0].to_json();
        assert!(hello.contains("\"map_name\":\"synthetic-straight-seed1\""));
    }

    #[test]
    fn pose_on_path_has_zero_deviation() {
        let mut c = straight_client();
        let out = c.handle_text(r#"{"type":"pose","x":0,"y":0,"z":0.3}"#);
        let cues = guidance(&out).cues.as_ref().unwrap();
        assert_eq!(cues.deviation_cm, 0.0);
        assert!(!cues.deviation_alert);
    }

    #[test]
    fn malformed_message_is_answered_and_ignored() {
        let mut c = straight_client();
        c.handle_text(r#"{"type":"step","forward":0.1,"turn_deg":0}"#);
        let before = (c.position(), c.yaw(), c.session().last_frame());
        for bad in ["", "{", "[]", r#"{"type":"fly"}"#, r#"{"type":"step","forward":"x"}"#, r#"{"type":"pose","x":1}"#]
        {
            let out = c.handle_text(bad);
            assert_eq!(out.len(), 1);
            assert!(matches!(&out[0], ServerMessage::Error { code, .. } if code == "bad_message"), "{bad}");
        }
        assert_eq!((c.position(), c.yaw(), c.session().last_frame()), before);
    }

    #[test]
    fn walking_forward_stays_straight() {
        let mut c = straight_client();
        for _ in 0..20 {
            let out = c.handle(ClientMessage::Step { forward: 0.03, turn_deg: 0.0 });
            assert_eq!(guidance(&out).direction(), Some(Direction::Straight));
        }
    }

    #[test]
    fn lateral_offset_raises_deviation_alert() {
        let mut c = straight_client();
        let off = 70.0 * 0.1 / 68.9;
        let out = c.handle(ClientMessage::Pose { x: off, y: 0.0, z: 0.5 });
        assert!(guidance(&out).deviation_alert());
    }

    #[test]
    fn injected_detection_then_approach_alerts() {
        let mut c = straight_client();
        c.handle(ClientMessage::Pose { x: 0.0, y: 0.0, z: 0.2 });
        let out = c.handle(ClientMessage::InjectDetection {
            class_name: "box".into(),
            bbox_center: [320.0, 240.0],
            bbox_size: [50.0, 50.0],
            confidence: 0.9,
        });
        assert!(out.iter().any(|m| m.kind() == "map"));
        let id = c.session().object_ids().next().expect("anchored");
        let target = c.map.point(id).unwrap().position;
        // Stand 50 cm short of the point along the line from the point to the camera.
        let cam = c.position();
        let d = planar(&target.sub(&cam));
        let stop = 50.0 * 0.1 / 68.9 / d.norm();
        let out = c.handle(ClientMessage::Pose { x: target.x - d.x * stop, y: 0.0, z: target.z - d.z * stop });
        let cues = guidance(&out).cues.as_ref().unwrap();
        assert!((cues.obstacles[0].distance_cm - 50.0).abs() < 1e-6);
        assert!(cues.obstacles[0].alert);
    }

    #[test]
    fn reset_clears_alerts_and_pose() {
        let mut c = straight_client();
        c.handle(ClientMessage::Pose { x: 1.0, y: 0.0, z: 0.5 });
        let out = c.handle(ClientMessage::Reset {});
        assert!(!guidance(&out).deviation_alert());
        assert_eq!(c.position(), Point3::ORIGIN);
        assert_eq!(c.session().last_frame(), Some(0));
    }

    #[test]
    fn step_turns_clockwise() {
        let mut c = straight_client();
        c.handle(ClientMessage::Step { forward: 0.1, turn_deg: 90.0 });
        assert!((c.position().x - 0.1).abs() < 1e-12 && c.position().z.abs() < 1e-12);
    }

    #[test]
    fn guidance_message_is_flat() {
        let mut c = straight_client();
        let out = c.handle(ClientMessage::Pose { x: 0.0, y: 0.0, z: 0.31 });
        let json = out[0].to_json();
        assert!(json.starts_with(r#"{"type":"guidance","frame":0,"localized":true,"direction":"straight""#), "{json}");
        let back: ServerMessage = serde_json::from_str(&json).unwrap();
        assert_eq!(back, out[0]);
    }
}
