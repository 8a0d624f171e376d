use super::{Direction, GuidanceConfig, GuidanceError, Orientation};
use crate::model::Point3;

/// Below this planar length a vector is treated as zero.
const COINCIDENT: f64 = 1e-12;

/// A ground-plane vector: `x` lateral, `z` forward.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarVector {
    pub x: f64,
    pub z: f64,
}

impl PlanarVector {
    pub const fn new(x: f64, z: f64) -> Self {
        Self { x, z }
    }

    pub fn norm(&self) -> f64 {
        self.x.hypot(self.z)
    }

    pub fn dot(&self, other: &PlanarVector) -> f64 {
        self.x * other.x + self.z * other.z
    }
}

/// Drops the vertical component.
pub fn planar(p: &Point3) -> PlanarVector {
    PlanarVector::new(p.x, p.z)
}

pub fn planar_distance(a: &Point3, b: &Point3) -> f64 {
    planar(&b.sub(a)).norm()
}

/// `a.x * b.z - a.z * b.x`: positive when `b` is counterclockwise of `a` in plan view.
pub fn cross2d(a: &PlanarVector, b: &PlanarVector) -> f64 {
    a.x * b.z - a.z * b.x
}

/// Cross product divided by both norms (the sine of the angle from `a` to
/// `b`), or zero when either operand vanishes.
pub fn normalized_cross(a: &PlanarVector, b: &PlanarVector) -> f64 {
    let (na, nb) = (a.norm(), b.norm());
    if na > 0.0 && nb > 0.0 {
        cross2d(a, b) / (na * nb)
    } else {
        0.0
    }
}

/// Turn cue toward `lookahead_kf`, relative to the bearing of `nearest_kf`,
/// both seen from `camera`.
pub fn next_step(
    camera: &Point3,
    nearest_kf: &Point3,
    lookahead_kf: &Point3,
    cfg: &GuidanceConfig,
) -> Result<Direction, GuidanceError> {
    let a = planar(&nearest_kf.sub(camera));
    let b = planar(&lookahead_kf.sub(camera));
    if a.norm() <= COINCIDENT || b.norm() <= COINCIDENT {
        return Err(GuidanceError::DegenerateGeometry);
    }
    let c = normalized_cross(&a, &b);
    if c.abs() <= cfg.colinear_epsilon {
        return Ok(Direction::Straight);
    }
    let plan_view = if c > 0.0 { Direction::Left } else { Direction::Right };
    Ok(match cfg.orientation {
        Orientation::PlanView => plan_view,
        Orientation::PaperLiteral => plan_view.flipped(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, z: f64) -> Point3 {
        Point3::new(x, 0.0, z)
    }

    #[test]
    fn planar_projection() {
        assert_eq!(planar(&Point3::new(1.0, 7.0, 2.0)), PlanarVector::new(1.0, 2.0));
        assert_eq!(planar(&Point3::ORIGIN), PlanarVector::new(0.0, 0.0));
        assert_eq!(planar_distance(&Point3::new(0.0, 5.0, 0.0), &Point3::new(3.0, 9.0, 4.0)), 5.0);
    }

    #[test]
    fn cross_values() {
        assert_eq!(cross2d(&PlanarVector::new(0.0, 1.0), &PlanarVector::new(-1.0, 0.0)), 1.0);
        let a = PlanarVector::new(0.3, -2.0);
        assert_eq!(cross2d(&a, &a), 0.0);
        assert_eq!(cross2d(&PlanarVector::new(1.0, 0.0), &PlanarVector::new(1.0, 1.0)), 1.0);
    }

    #[test]
    fn straight_left_right() {
        let cfg = GuidanceConfig::default();
        let cam = p(0.0, 0.0);
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(0.0, 2.0), &cfg), Ok(Direction::Straight));
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(-1.0, 2.0), &cfg), Ok(Direction::Left));
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(1.0, 2.0), &cfg), Ok(Direction::Right));
    }

    #[test]
    fn literal_orientation_flips() {
        let cfg = GuidanceConfig { orientation: Orientation::PaperLiteral, ..Default::default() };
        let cam = p(0.0, 0.0);
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(-1.0, 2.0), &cfg), Ok(Direction::Right));
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(1.0, 2.0), &cfg), Ok(Direction::Left));
        assert_eq!(next_step(&cam, &p(0.0, 1.0), &p(0.0, 3.0), &cfg), Ok(Direction::Straight));
    }

    #[test]
    fn coincident_camera_is_degenerate() {
        let cfg = GuidanceConfig::default();
        assert_eq!(next_step(&p(1.0, 1.0), &p(1.0, 1.0), &p(2.0, 2.0), &cfg), Err(GuidanceError::DegenerateGeometry));
        assert_eq!(next_step(&p(0.0, 0.0), &p(1.0, 1.0), &p(0.0, 0.0), &cfg), Err(GuidanceError::DegenerateGeometry));
    }

    #[test]
    fn vertical_offsets_do_not_matter() {
        let cfg = GuidanceConfig::default();
        let d =
            next_step(&Point3::new(0.0, 4.0, 0.0), &Point3::new(0.0, -3.0, 1.0), &Point3::new(-1.0, 9.0, 2.0), &cfg);
        assert_eq!(d, Ok(Direction::Left));
    }
}
