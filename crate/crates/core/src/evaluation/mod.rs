//! Synthetic routes, turn-prediction scoring and checkpoint tables.

mod accuracy;
mod synth;
mod tables;

pub use accuracy::{
    half_plane_side, label_ground_truth, label_shape, mean_stddev, monte_carlo, next_step_accuracy, overall_accuracy,
    reports_to_csv, AccuracyReport, DirectionLabel, EvaluationError, MonteCarloSummary, REPORT_CSV_HEADER,
};
pub use synth::{generate_synthetic_map, PathShape, ShapeError, ShapeKind, Turn};
pub use tables::{
    load_fixtures, reproduce_checkpoint_tables, CheckpointTable, TablesError, TablesReport, BUNDLED_FIXTURES,
};
