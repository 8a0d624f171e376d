//! Path-following guidance on pre-built monocular SLAM maps.
//!
//! The crate ingests a keyframe map and a stream of per-frame poses and
//! detections, and turns them into navigation cues: how far the camera has
//! strayed from the recorded route, which obstacles are too close, and
//! whether the route ahead bends left or right.
//!
//! * [`model`] holds the map, replay and detection data model and file formats.
//! * [`calibration`] converts map units to centimeters.
//! * [`guidance`] has the geometric primitives.
//! * [`session`] runs the per-frame pipeline with alert hysteresis.
//! * [`evaluation`] generates synthetic routes and scores turn prediction.
//! * [`service`] serves live guidance over WebSocket.

pub mod calibration;
pub mod evaluation;
pub mod guidance;
pub mod model;
pub mod service;
pub mod session;

pub use calibration::{CheckpointRow, ScaleCalibration};
pub use guidance::{Direction, GuidanceConfig, Orientation};
pub use model::{FrameInput, Point3, Pose, WorldMap};
pub use session::{GuidanceOutput, Session, SessionMode};
