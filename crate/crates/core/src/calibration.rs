//! Conversion between map units and centimeters.
//!
//! Monocular maps have arbitrary scale. A tape measure fixes it: the real
//! length of [`REFERENCE_MAP_UNITS`] map units is recorded once per map as
//! `reference_cm`, and every distance converts linearly from there.
//!
//! Checkpoint tables report estimated distances truncated toward zero at one
//! decimal, with the absolute error taken against that reported value.

use crate::model::{CheckPoint, WorldMap};
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

/// Length in map units that the tape-measured reference corresponds to.
pub const REFERENCE_MAP_UNITS: f64 = 0.1;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("distance {0} is negative")]
    NegativeDistance(f64),
    #[error("reference length {0} cm must be positive and finite")]
    InvalidReference(f64),
    #[error("map has no scale reference")]
    MissingCalibration,
    #[error("map has no checkpoints")]
    NoCheckpoints,
    #[error("no checkpoint rows to average")]
    EmptyInput,
}

/// The centimeter length of 0.1 map units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCalibration {
    reference_cm: f64,
}

impl ScaleCalibration {
    pub fn new(reference_cm: f64) -> Result<Self, CalibrationError> {
        if reference_cm.is_finite() && reference_cm > 0.0 {
            Ok(Self { reference_cm })
        } else {
            Err(CalibrationError::InvalidReference(reference_cm))
        }
    }

    pub fn from_map(map: &WorldMap) -> Result<Self, CalibrationError> {
        Self::new(map.scale_reference_cm.ok_or(CalibrationError::MissingCalibration)?)
    }

    pub fn reference_cm(&self) -> f64 {
        self.reference_cm
    }

    pub fn reference_map_units(&self) -> f64 {
        REFERENCE_MAP_UNITS
    }

    /// Centimeters per whole map unit.
    pub fn cm_per_unit(&self) -> f64 {
        self.reference_cm / REFERENCE_MAP_UNITS
    }

    pub fn map_to_cm(&self, d: f64) -> Result<f64, CalibrationError> {
        if d < 0.0 {
            return Err(CalibrationError::NegativeDistance(d));
        }
        Ok(d * self.reference_cm / REFERENCE_MAP_UNITS)
    }

    pub fn cm_to_map(&self, c: f64) -> Result<f64, CalibrationError> {
        if c < 0.0 {
            return Err(CalibrationError::NegativeDistance(c));
        }
        Ok(c * REFERENCE_MAP_UNITS / self.reference_cm)
    }
}

/// Truncates toward zero at one decimal.
///
/// Products such as `0.30 * 666.0` land a hair below their decimal value in
/// binary floating point, so the value is snapped at 1e-9 relative before
/// truncating.
pub fn truncate_tenths(x: f64) -> f64 {
    let scaled = x * 10.0;
    let snapped = scaled + scaled.signum() * 1e-9 * scaled.abs().max(1.0);
    snapped.trunc() / 10.0
}

/// One line of a checkpoint error table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub label: String,
    pub map_distance: f64,
    pub approx_cm: f64,
    pub actual_cm: f64,
    pub error_cm: f64,
}

/// Planar (`X`/`Z`) distance between the two endpoints of a checkpoint.
pub fn checkpoint_map_distance(c: &CheckPoint) -> f64 {
    (c.endpoint_b.x - c.endpoint_a.x).hypot(c.endpoint_b.z - c.endpoint_a.z)
}

pub fn checkpoint_row(calib: &ScaleCalibration, c: &CheckPoint) -> CheckpointRow {
    let map_distance = checkpoint_map_distance(c);
    let approx_cm = truncate_tenths(calib.map_to_cm(map_distance).expect("planar distances are non-negative"));
    CheckpointRow {
        label: c.label.clone(),
        map_distance,
        approx_cm,
        actual_cm: c.actual_cm,
        error_cm: (approx_cm - c.actual_cm).abs(),
    }
}

/// Estimated vs. tape-measured distance for every checkpoint of `map`.
pub fn checkpoint_table(calib: &ScaleCalibration, map: &WorldMap) -> Result<Vec<CheckpointRow>, CalibrationError> {
    if map.checkpoints.is_empty() {
        return Err(CalibrationError::NoCheckpoints);
    }
    Ok(map.checkpoints.iter().map(|c| checkpoint_row(calib, c)).collect())
}

pub fn mean_absolute_error<'a>(rows: impl IntoIterator<Item = &'a CheckpointRow>) -> Result<f64, CalibrationError> {
    let (sum, n) = rows.into_iter().fold((0.0, 0usize), |(s, n), r| (s + r.error_cm, n + 1));
    if n == 0 {
        return Err(CalibrationError::EmptyInput);
    }
    Ok(sum / n as f64)
}

pub const CSV_HEADER: &str = "label,map_distance,approx_cm,actual_cm,error_cm";

/// Renders rows as CSV under [`CSV_HEADER`]. `prefix`, when given, is
/// prepended to each label as `prefix/label`.
pub fn rows_to_csv(rows: &[CheckpointRow], prefix: Option<&str>, with_header: bool) -> String {
    let mut out = String::new();
    if with_header {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    for r in rows {
        let label = match prefix {
            Some(p) => format!("{p}/{}", r.label),
            None => r.label.clone(),
        };
        writeln!(
            out,
            "{},{},{:.1},{},{:.1}",
            label,
            crate::model::canonical::format_f64(r.map_distance),
            r.approx_cm,
            crate::model::canonical::format_f64(r.actual_cm),
            r.error_cm
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Point3;

    fn checkpoint(label: &str, d: f64, actual: f64) -> CheckPoint {
        CheckPoint {
            label: label.into(),
            endpoint_a: Point3::new(0.0, 0.0, 0.0),
            endpoint_b: Point3::new(d, 0.0, 0.0),
            actual_cm: actual,
        }
    }

    #[test]
    fn straight_reference_row_a() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let cm = c.map_to_cm(0.36).unwrap();
        assert!((cm - 248.04).abs() < 1e-9);
        assert_eq!(truncate_tenths(cm), 248.0);
    }

    #[test]
    fn l_reference_row_c() {
        let c = ScaleCalibration::new(74.6).unwrap();
        let cm = c.map_to_cm(0.39).unwrap();
        assert!((cm - 290.94).abs() < 1e-9);
        assert_eq!(truncate_tenths(cm), 290.9);
    }

    #[test]
    fn zero_and_negative() {
        let c = ScaleCalibration::new(68.9).unwrap();
        assert_eq!(c.map_to_cm(0.0), Ok(0.0));
        assert_eq!(c.cm_to_map(0.0), Ok(0.0));
        assert_eq!(c.map_to_cm(-0.1), Err(CalibrationError::NegativeDistance(-0.1)));
        assert_eq!(c.cm_to_map(-1.0), Err(CalibrationError::NegativeDistance(-1.0)));
    }

    #[test]
    fn threshold_to_map_units() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let expected = 60.0 * 0.1 / 68.9;
        assert!((c.cm_to_map(60.0).unwrap() - expected).abs() < 1e-15);
        assert!((c.cm_to_map(60.0).unwrap() - 0.087083).abs() < 1e-6);
    }

    #[test]
    fn invalid_reference() {
        assert!(ScaleCalibration::new(0.0).is_err());
        assert!(ScaleCalibration::new(-3.0).is_err());
        assert!(ScaleCalibration::new(f64::NAN).is_err());
    }

    #[test]
    fn truncation_snaps_binary_noise() {
        // 0.30 * 666 / 0.1 evaluates to 1997.9999999999998 / 10 in f64.
        assert_eq!(truncate_tenths(0.30 * 66.6 / 0.1), 199.8);
        assert_eq!(truncate_tenths(144.69), 144.6);
        assert_eq!(truncate_tenths(193.96), 193.9);
        assert_eq!(truncate_tenths(0.0), 0.0);
    }

    #[test]
    fn table_rows_from_published_columns() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let row = checkpoint_row(&c, &checkpoint("B", 0.38, 252.0));
        assert_eq!(row.approx_cm, 261.8);
        assert!((row.error_cm - 9.8).abs() < 1e-9);

        let c = ScaleCalibration::new(66.6).unwrap();
        let row = checkpoint_row(&c, &checkpoint("B", 0.31, 210.0));
        assert_eq!(row.approx_cm, 206.4);
        assert!((row.error_cm - 3.6).abs() < 1e-9);
    }

    #[test]
    fn degenerate_checkpoint() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let row = checkpoint_row(&c, &checkpoint("Z", 0.0, 10.0));
        assert_eq!((row.approx_cm, row.error_cm), (0.0, 10.0));
    }

    #[test]
    fn vertical_offset_is_ignored() {
        let c = CheckPoint {
            label: "Y".into(),
            endpoint_a: Point3::new(0.0, 5.0, 0.0),
            endpoint_b: Point3::new(3.0, -2.0, 4.0),
            actual_cm: 1.0,
        };
        assert_eq!(checkpoint_map_distance(&c), 5.0);
    }

    #[test]
    fn table_errors() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let map = WorldMap::new("empty", Vec::new());
        assert_eq!(checkpoint_table(&c, &map), Err(CalibrationError::NoCheckpoints));
        assert_eq!(ScaleCalibration::from_map(&map), Err(CalibrationError::MissingCalibration));
    }

    #[test]
    fn mae_cases() {
        let row =
            |e: f64| CheckpointRow { label: "x".into(), map_distance: 0.0, approx_cm: 0.0, actual_cm: e, error_cm: e };
        assert_eq!(mean_absolute_error(&[row(6.4)]), Ok(6.4));
        let mae = mean_absolute_error(&[row(8.0), row(9.8), row(6.4)]).unwrap();
        assert!((mae - 24.2 / 3.0).abs() < 1e-12);
        assert_eq!(mean_absolute_error(&[]), Err(CalibrationError::EmptyInput));
    }

    #[test]
    fn csv_header_and_row() {
        let c = ScaleCalibration::new(68.9).unwrap();
        let rows = vec![checkpoint_row(&c, &checkpoint("A", 0.36, 240.0))];
        assert_eq!(
            rows_to_csv(&rows, Some("straight"), true),
            format!("{CSV_HEADER}\nstraight/A,0.36,248.0,240,8.0\n")
        );
    }
}
