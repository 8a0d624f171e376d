//! Checkpoint error tables for the four surveyed routes.

use crate::calibration::{
    checkpoint_table, mean_absolute_error, rows_to_csv, CalibrationError, CheckpointRow, ScaleCalibration, CSV_HEADER,
};
use crate::model::canonical::format_f64;
use crate::model::{load_map, LoadError, WorldMap};
use serde::{Deserialize, Serialize};
use std::fmt::Write;
use thiserror::Error;

/// Survey maps shipped with the crate: straight, L, U and square routes, each
/// with its tape-measured reference length and three checkpoints.
pub const BUNDLED_FIXTURES: [(&str, &str); 4] = [
    ("01_straight.json", include_str!("../../fixtures/checkpoints/01_straight.json")),
    ("02_l_shaped.json", include_str!("../../fixtures/checkpoints/02_l_shaped.json")),
    ("03_u_shaped.json", include_str!("../../fixtures/checkpoints/03_u_shaped.json")),
    ("04_square.json", include_str!("../../fixtures/checkpoints/04_square.json")),
];

#[derive(Debug, Error, PartialEq)]
pub enum TablesError {
    #[error("{file}: {source}")]
    Load { file: String, source: LoadError },
    #[error("{map}: {source}")]
    Calibration { map: String, source: CalibrationError },
    #[error("no fixture maps found")]
    NoFixtures,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointTable {
    pub map_name: String,
    pub reference_cm: f64,
    pub rows: Vec<CheckpointRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesReport {
    pub tables: Vec<CheckpointTable>,
    pub mae_cm: f64,
}

impl TablesReport {
    pub fn from_maps<'a>(maps: impl IntoIterator<Item = &'a WorldMap>) -> Result<Self, TablesError> {
        let mut tables = Vec::new();
        for map in maps {
            let wrap = |source| TablesError::Calibration { map: map.name.clone(), source };
            let calib = ScaleCalibration::from_map(map).map_err(wrap)?;
            let rows = checkpoint_table(&calib, map).map_err(wrap)?;
            tables.push(CheckpointTable { map_name: map.name.clone(), reference_cm: calib.reference_cm(), rows });
        }
        if tables.is_empty() {
            return Err(TablesError::NoFixtures);
        }
        let mae_cm = mean_absolute_error(tables.iter().flat_map(|t| &t.rows)).expect("every table has rows");
        Ok(Self { tables, mae_cm })
    }

    /// Aligned text tables followed by a final `MAE <cm>` line.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for t in &self.tables {
            writeln!(out, "{} ({} cm per 0.1 map units)", t.map_name, format_f64(t.reference_cm)).unwrap();
            writeln!(
                out,
                "{:<8}{:>14}{:>12}{:>12}{:>10}",
                "label", "map_distance", "approx_cm", "actual_cm", "error_cm"
            )
            .unwrap();
            for r in &t.rows {
                writeln!(
                    out,
                    "{:<8}{:>14}{:>12.1}{:>12}{:>10.1}",
                    r.label,
                    format_f64(r.map_distance),
                    r.approx_cm,
                    format_f64(r.actual_cm),
                    r.error_cm
                )
                .unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "MAE {:.2}", self.mae_cm).unwrap();
        out
    }

    /// One CSV document; labels are qualified as `map/label`.
    pub fn render_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for t in &self.tables {
            out.push_str(&rows_to_csv(&t.rows, Some(&t.map_name), false));
        }
        out
    }
}

pub fn load_fixtures<'a>(files: impl IntoIterator<Item = (&'a str, &'a [u8])>) -> Result<Vec<WorldMap>, TablesError> {
    files
        .into_iter()
        .map(|(file, bytes)| load_map(bytes).map_err(|source| TablesError::Load { file: file.to_string(), source }))
        .collect()
}

/// Tables and mean absolute error over the bundled survey maps.
pub fn reproduce_checkpoint_tables() -> TablesReport {
    let maps = load_fixtures(BUNDLED_FIXTURES.iter().map(|(f, s)| (*f, s.as_bytes()))).expect("bundled fixtures load");
    TablesReport::from_maps(&maps).expect("bundled fixtures are calibrated")
}
