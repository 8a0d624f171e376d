use super::camera::{project, CameraIntrinsics};
use super::geometry::planar_distance;
use super::{GuidanceConfig, GuidanceError};
use crate::calibration::ScaleCalibration;
use crate::model::{Detection, FrameInput, Point3, WorldMap};

/// Id of the map point whose image position is closest to the detection's
/// bounding-box center.
///
/// Image positions come from the frame's observations when it has any that
/// refer to known points; otherwise every map point is projected through
/// `intr` from the frame pose. Equal distances resolve to the lowest id.
/// Labeling the winner is left to the caller.
pub fn anchor_obstacle(
    frame: &FrameInput,
    map: &WorldMap,
    det: &Detection,
    intr: Option<&CameraIntrinsics>,
) -> Result<u64, GuidanceError> {
    let [bu, bv] = det.bbox_center;
    let mut best: Option<(u64, f64)> = None;
    let mut consider = |id: u64, px: [f64; 2]| {
        let d = (px[0] - bu).hypot(px[1] - bv);
        best = match best {
            Some((bid, bd)) if bd < d || (bd == d && bid <= id) => Some((bid, bd)),
            _ => Some((id, d)),
        };
    };

    let mut observed = false;
    for o in &frame.observations {
        if map.point(o.point_id).is_some() {
            observed = true;
            consider(o.point_id, o.pixel);
        }
    }
    if !observed {
        if let Some(intr) = intr {
            for p in &map.map_points {
                if let Some(px) = project(intr, &frame.pose, &p.position) {
                    consider(p.id, px);
                }
            }
        }
    }
    best.map(|(id, _)| id).ok_or(GuidanceError::NoVisiblePoints)
}

/// Planar camera-to-obstacle distance in map units.
pub fn obstacle_distance(camera: &Point3, obstacle: &Point3) -> f64 {
    planar_distance(camera, obstacle)
}

/// `true` when `distance_map_units` is strictly inside the obstacle threshold.
pub fn proximity_alert(
    distance_map_units: f64,
    calib: Option<&ScaleCalibration>,
    cfg: &GuidanceConfig,
) -> Result<bool, GuidanceError> {
    let calib = calib.ok_or(GuidanceError::MissingCalibration)?;
    let limit = calib.cm_to_map(cfg.obstacle_threshold_cm).map_err(|e| GuidanceError::InvalidConfig(e.to_string()))?;
    Ok(distance_map_units < limit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{MapPoint, Observation, PointLabel, Pose};

    fn det(u: f64, v: f64) -> Detection {
        Detection { class_name: "chair".into(), bbox_center: [u, v], bbox_size: [40.0, 60.0], confidence: 0.9 }
    }

    fn map_with_points(ids: &[u64]) -> WorldMap {
        let mut m = WorldMap::new("t", Vec::new());
        m.map_points = ids
            .iter()
            .map(|&id| MapPoint { id, position: Point3::new(0.0, 0.0, id as f64 + 1.0), label: PointLabel::Generic })
            .collect();
        m
    }

    fn frame_with(obs: &[(u64, f64, f64)]) -> FrameInput {
        let mut f = FrameInput::at(0, 0.0, Pose::default());
        f.observations = obs.iter().map(|&(point_id, u, v)| Observation { point_id, pixel: [u, v] }).collect();
        f
    }

    #[test]
    fn picks_closest_observation() {
        let m = map_with_points(&[1, 2]);
        let f = frame_with(&[(1, 100.0, 100.0), (2, 300.0, 220.0)]);
        assert_eq!(anchor_obstacle(&f, &m, &det(310.0, 200.0), None), Ok(2));
    }

    #[test]
    fn single_observation_wins_regardless_of_distance() {
        let m = map_with_points(&[9]);
        let f = frame_with(&[(9, 0.0, 0.0)]);
        assert_eq!(anchor_obstacle(&f, &m, &det(5000.0, 5000.0), None), Ok(9));
    }

    #[test]
    fn tie_goes_to_lowest_id() {
        let m = map_with_points(&[3, 5]);
        let f = frame_with(&[(5, 90.0, 100.0), (3, 110.0, 100.0)]);
        assert_eq!(anchor_obstacle(&f, &m, &det(100.0, 100.0), None), Ok(3));
    }

    #[test]
    fn falls_back_to_projection() {
        // Points on the optical axis all project to the principal point; lowest id wins.
        let m = map_with_points(&[4, 6]);
        let f = frame_with(&[]);
        let intr = CameraIntrinsics::vga();
        assert_eq!(anchor_obstacle(&f, &m, &det(320.0, 240.0), Some(&intr)), Ok(4));
    }

    #[test]
    fn nothing_visible() {
        let m = map_with_points(&[1]);
        let f = frame_with(&[]);
        assert_eq!(anchor_obstacle(&f, &m, &det(1.0, 1.0), None), Err(GuidanceError::NoVisiblePoints));
        let behind = FrameInput::at(0, 0.0, Pose::from_yaw(Point3::ORIGIN, std::f64::consts::PI));
        assert_eq!(
            anchor_obstacle(&behind, &m, &det(1.0, 1.0), Some(&CameraIntrinsics::vga())),
            Err(GuidanceError::NoVisiblePoints)
        );
    }

    #[test]
    fn distance_cases() {
        let a = Point3::new(0.0, 0.0, 0.0);
        let b = Point3::new(3.0, 1.0, 4.0);
        assert_eq!(obstacle_distance(&a, &a), 0.0);
        assert_eq!(obstacle_distance(&a, &b), 5.0);
        assert_eq!(obstacle_distance(&b, &a), 5.0);
    }

    #[test]
    fn proximity_boundary() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let cfg = GuidanceConfig::default();
        assert_eq!(proximity_alert(0.05, Some(&c), &cfg), Ok(true));
        assert_eq!(proximity_alert(1.0, Some(&c), &cfg), Ok(false));
        let at = c.cm_to_map(60.0).unwrap();
        assert_eq!(proximity_alert(at, Some(&c), &cfg), Ok(false));
        assert_eq!(proximity_alert(0.05, None, &cfg), Err(GuidanceError::MissingCalibration));
    }
}
