//! Map, replay and detection data model.
//!
//! A [`WorldMap`] is the fixed-scale artifact produced by a monocular SLAM
//! session: the keyframe trajectory that defines the route, the triangulated
//! landmarks, and any tape-measured checkpoints used to calibrate scale.
//! Everything here is plain data; file formats live in [`io`].
//!
//! Coordinates are in map units. `Y` is the vertical axis and is ignored by
//! every planar computation in the crate.

pub mod canonical;
pub mod io;

use serde::{Deserialize, Serialize};

pub use io::{
    bind_replay, detection_problem, load_map, load_replay, save_map, save_replay, validate_map, LoadError, Violation,
    ViolationCode,
};

/// A point or vector in map coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3) -> Point3 {
        Point3::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn add(&self, other: &Point3) -> Point3 {
        Point3::new(self.x + other.x, self.y + other.y, self.z + other.z)
    }

    pub fn scale(&self, k: f64) -> Point3 {
        Point3::new(self.x * k, self.y * k, self.z * k)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

impl From<[f64; 3]> for Point3 {
    fn from(v: [f64; 3]) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

impl From<Point3> for [f64; 3] {
    fn from(p: Point3) -> Self {
        [p.x, p.y, p.z]
    }
}

/// Rotation quaternion stored as `(w, x, y, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Default for Quaternion {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    /// Rotation of `angle` radians about the vertical (`Y`) axis.
    ///
    /// With the camera looking down `+Z` and `X` to its right, a positive yaw
    /// turns the camera toward `+X` (a right turn seen from above).
    pub fn from_yaw(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        Self::new(c, 0.0, s, 0.0)
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn conjugate(&self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    /// Rotates `v` by this (assumed unit) quaternion.
    pub fn rotate(&self, v: &Point3) -> Point3 {
        // v' = v + 2w (q × v) + 2 q × (q × v)
        let q = Point3::new(self.x, self.y, self.z);
        let t = cross3(&q, v).scale(2.0);
        v.add(&t.scale(self.w)).add(&cross3(&q, &t))
    }
}

fn cross3(a: &Point3, b: &Point3) -> Point3 {
    Point3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

impl From<[f64; 4]> for Quaternion {
    fn from(v: [f64; 4]) -> Self {
        Quaternion::new(v[0], v[1], v[2], v[3])
    }
}

impl From<Quaternion> for [f64; 4] {
    fn from(q: Quaternion) -> Self {
        [q.w, q.x, q.y, q.z]
    }
}

/// World-from-camera rigid transform.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub position: Point3,
    #[serde(rename = "orientation_wxyz")]
    pub orientation: Quaternion,
}

impl Pose {
    pub fn new(position: Point3, orientation: Quaternion) -> Self {
        Self { position, orientation }
    }

    /// Camera at `position` looking along the planar heading `yaw`.
    pub fn from_yaw(position: Point3, yaw: f64) -> Self {
        Self::new(position, Quaternion::from_yaw(yaw))
    }

    pub fn camera_to_world(&self, p: &Point3) -> Point3 {
        self.orientation.rotate(p).add(&self.position)
    }

    pub fn world_to_camera(&self, p: &Point3) -> Point3 {
        self.orientation.conjugate().rotate(&p.sub(&self.position))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyFrame {
    pub id: u64,
    pub timestamp: f64,
    pub pose: Pose,
}

impl KeyFrame {
    /// Camera center in map coordinates.
    pub fn center(&self) -> Point3 {
        self.pose.position
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointLabel {
    #[default]
    Generic,
    Object,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub id: u64,
    pub position: Point3,
    pub label: PointLabel,
}

/// Pair of physical points whose separation was tape-measured.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckPoint {
    pub label: String,
    pub endpoint_a: Point3,
    pub endpoint_b: Point3,
    pub actual_cm: f64,
}

/// Feature-extractor settings recorded with a map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbParams {
    pub n_features: u32,
    pub scale_factor: f64,
    pub n_levels: u32,
    pub fast_threshold: u32,
}

impl Default for OrbParams {
    fn default() -> Self {
        Self { n_features: 2000, scale_factor: 1.2, n_levels: 8, fast_threshold: 10 }
    }
}

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct WorldMap {
    pub name: String,
    pub format_version: u32,
    /// Real length, in centimeters, of 0.1 map units.
    pub scale_reference_cm: Option<f64>,
    pub orb_params: OrbParams,
    pub keyframes: Vec<KeyFrame>,
    pub map_points: Vec<MapPoint>,
    pub checkpoints: Vec<CheckPoint>,
}

impl WorldMap {
    /// A map with default metadata around the given trajectory.
    pub fn new(name: impl Into<String>, keyframes: Vec<KeyFrame>) -> Self {
        Self {
            name: name.into(),
            format_version: FORMAT_VERSION,
            scale_reference_cm: None,
            orb_params: OrbParams::default(),
            keyframes,
            map_points: Vec::new(),
            checkpoints: Vec::new(),
        }
    }

    pub fn point(&self, id: u64) -> Option<&MapPoint> {
        // Generated and loaded maps keep points sorted by id; fall back to a scan otherwise.
        match self.map_points.binary_search_by_key(&id, |p| p.id) {
            Ok(i) => Some(&self.map_points[i]),
            Err(_) => self.map_points.iter().find(|p| p.id == id),
        }
    }

    pub fn keyframe_centers(&self) -> impl Iterator<Item = Point3> + '_ {
        self.keyframes.iter().map(KeyFrame::center)
    }
}

/// One object detection in image space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_name: String,
    pub bbox_center: [f64; 2],
    pub bbox_size: [f64; 2],
    pub confidence: f64,
}

/// A map point seen at a pixel location in the current frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub point_id: u64,
    pub pixel: [f64; 2],
}

/// Everything the guidance pipeline receives for one camera frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameInput {
    pub frame: u64,
    pub timestamp: f64,
    pub pose: Pose,
    pub tracked: bool,
    #[serde(default)]
    pub observations: Vec<Observation>,
    #[serde(default)]
    pub detections: Vec<Detection>,
}

impl FrameInput {
    /// A tracked frame with no observations or detections.
    pub fn at(frame: u64, timestamp: f64, pose: Pose) -> Self {
        Self { frame, timestamp, pose, tracked: true, observations: Vec::new(), detections: Vec::new() }
    }
}
