use crate::model::{Point3, Pose};
use serde::{Deserialize, Serialize};

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Option<Self> {
        (fx > 0.0 && fy > 0.0 && cx.is_finite() && cy.is_finite()).then_some(Self { fx, fy, cx, cy })
    }

    /// A 640×480 forward camera with a roughly 65° horizontal field of view.
    pub fn vga() -> Self {
        Self { fx: 500.0, fy: 500.0, cx: 320.0, cy: 240.0 }
    }

    /// Image bounds implied by a centered principal point.
    pub fn image_size(&self) -> (f64, f64) {
        (2.0 * self.cx, 2.0 * self.cy)
    }
}

/// Pixel of world point `p` seen from `pose`, or `None` when it is not in
/// front of the camera. The camera looks down its `+Z` with `+X` right and
/// `+Y` down the image.
pub fn project(intr: &CameraIntrinsics, pose: &Pose, p: &Point3) -> Option<[f64; 2]> {
    let c = pose.world_to_camera(p);
    // Also rejects NaN depths.
    if c.z.is_nan() || c.z <= 0.0 {
        return None;
    }
    Some([intr.fx * (c.x / c.z) + intr.cx, intr.fy * (c.y / c.z) + intr.cy])
}

/// World point at camera-frame `depth` along the ray through `pixel`.
pub fn unproject(intr: &CameraIntrinsics, pose: &Pose, pixel: [f64; 2], depth: f64) -> Point3 {
    let x = (pixel[0] - intr.cx) / intr.fx * depth;
    let y = (pixel[1] - intr.cy) / intr.fy * depth;
    pose.camera_to_world(&Point3::new(x, y, depth))
}
