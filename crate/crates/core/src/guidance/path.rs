use super::geometry::{planar, planar_distance, PlanarVector};
use super::GuidanceError;
use crate::model::{Point3, WorldMap};

/// Index of the keyframe whose center is planar-closest to `position`, and
/// that distance. Equal distances resolve to the lowest keyframe id.
pub fn nearest_keyframe(map: &WorldMap, position: &Point3) -> Result<(usize, f64), GuidanceError> {
    let mut best: Option<(usize, f64)> = None;
    for (i, kf) in map.keyframes.iter().enumerate() {
        let d = planar_distance(position, &kf.center());
        best = match best {
            Some((j, bd)) if bd < d || (bd == d && map.keyframes[j].id <= kf.id) => Some((j, bd)),
            _ => Some((i, d)),
        };
    }
    best.ok_or(GuidanceError::EmptyMap)
}

/// `min(nearest + lookahead, last)`.
pub fn lookahead_index(nearest: usize, lookahead: usize, keyframe_count: usize) -> usize {
    nearest.saturating_add(lookahead).min(keyframe_count.saturating_sub(1))
}

/// Planar distance from `p` to the segment `a`–`b`.
pub fn point_segment_distance(p: &PlanarVector, a: &PlanarVector, b: &PlanarVector) -> f64 {
    let ab = PlanarVector::new(b.x - a.x, b.z - a.z);
    let ap = PlanarVector::new(p.x - a.x, p.z - a.z);
    let len2 = ab.dot(&ab);
    let t = if len2 > 0.0 { (ap.dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap.x - t * ab.x).hypot(ap.z - t * ab.z)
}

/// Planar distance from `position` to the keyframe polyline.
pub fn path_deviation(map: &WorldMap, position: &Point3) -> Result<f64, GuidanceError> {
    if map.keyframes.len() < 2 {
        return Err(GuidanceError::TooFewKeyframes);
    }
    let p = planar(position);
    Ok(map
        .keyframes
        .windows(2)
        .map(|w| point_segment_distance(&p, &planar(&w[0].center()), &planar(&w[1].center())))
        .fold(f64::INFINITY, f64::min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KeyFrame, Pose};

    fn map_of(points: &[(u64, f64, f64)]) -> WorldMap {
        let kfs = points
            .iter()
            .enumerate()
            .map(|(i, &(id, x, z))| KeyFrame {
                id,
                timestamp: i as f64,
                pose: Pose::from_yaw(Point3::new(x, 0.0, z), 0.0),
            })
            .collect();
        WorldMap::new("t", kfs)
    }

    #[test]
    fn exact_keyframe() {
        let m = map_of(&[(0, 0.0, 0.0), (1, 0.0, 1.0), (2, 0.0, 2.0), (3, 1.0, 2.0)]);
        assert_eq!(nearest_keyframe(&m, &Point3::new(1.0, 0.4, 2.0)), Ok((3, 0.0)));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        // ids 7 and 2, both 1 unit from the query; index order puts 7 first.
        let m = map_of(&[(7, -1.0, 0.0), (2, 1.0, 0.0)]);
        assert_eq!(nearest_keyframe(&m, &Point3::ORIGIN), Ok((1, 1.0)));
        let m = map_of(&[(2, -1.0, 0.0), (7, 1.0, 0.0)]);
        assert_eq!(nearest_keyframe(&m, &Point3::ORIGIN), Ok((0, 1.0)));
    }

    #[test]
    fn empty_and_short_maps() {
        let m = map_of(&[]);
        assert_eq!(nearest_keyframe(&m, &Point3::ORIGIN), Err(GuidanceError::EmptyMap));
        let m = map_of(&[(0, 0.0, 0.0)]);
        assert_eq!(path_deviation(&m, &Point3::ORIGIN), Err(GuidanceError::TooFewKeyframes));
    }

    #[test]
    fn deviation_on_vertex_and_midpoint() {
        let m = map_of(&[(0, 0.0, 0.0), (1, 0.0, 2.0)]);
        assert_eq!(path_deviation(&m, &Point3::new(0.0, 3.0, 2.0)), Ok(0.0));
        assert_eq!(path_deviation(&m, &Point3::new(0.25, 0.0, 1.0)), Ok(0.25));
        // Past the end, distance is to the endpoint.
        assert_eq!(path_deviation(&m, &Point3::new(3.0, 0.0, 6.0)), Ok(5.0));
    }

    #[test]
    fn lookahead_clamps() {
        assert_eq!(lookahead_index(3, 5, 20), 8);
        assert_eq!(lookahead_index(17, 5, 20), 19);
        assert_eq!(lookahead_index(19, 5, 20), 19);
    }

    #[test]
    fn zero_length_segment() {
        let a = PlanarVector::new(1.0, 1.0);
        assert_eq!(point_segment_distance(&PlanarVector::new(4.0, 5.0), &a, &a), 5.0);
    }
}
