//! The `navsim` command line.
//!
//! Every subcommand is a plain function from parsed arguments to the text it
//! prints on stdout, so the same code paths can be driven from tests without
//! spawning a process. Diagnostics are returned as errors and printed to
//! stderr by the binary.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use navsim::evaluation::{
    monte_carlo, overall_accuracy, AccuracyReport, MonteCarloSummary, PathShape, ShapeKind, TablesReport,
};
use navsim::model::canonical::format_f64;
use navsim::model::{bind_replay, load_map, load_replay, save_map, validate_map, WorldMap};
use navsim::service::{serve, DEFAULT_PORT};
use navsim::session::run_replay;
use navsim::{GuidanceConfig, Orientation, ScaleCalibration, Session, SessionMode};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

/// Exit status for success.
pub const EXIT_OK: i32 = 0;
/// Exit status for invalid inputs and other domain failures.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status for malformed command lines (clap's own convention).
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "navsim", version, about = "Guidance engine and simulator for pre-built monocular SLAM maps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Set a map's scale reference and print the resulting cm-per-unit factor.
    Calibrate(CalibrateArgs),
    /// Print checkpoint error tables and their mean absolute error.
    Tables(TablesArgs),
    /// Run a recorded frame log through a guidance session.
    Replay(ReplayArgs),
    /// Measure turn-prediction accuracy on synthetic routes.
    Evaluate(EvaluateArgs),
    /// Serve live guidance over WebSocket.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Real-world length in centimeters of 0.1 map units.
    #[arg(long, value_parser = positive_f64)]
    pub reference_cm: f64,
    /// Where to write the calibrated map; defaults to rewriting `--map`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    /// Directory of calibrated maps with checkpoints (`*.json`).
    #[arg(long)]
    pub fixtures: PathBuf,
    #[arg(long)]
    pub csv: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub map: PathBuf,
    /// Newline-delimited JSON frame log.
    #[arg(long)]
    pub log: PathBuf,
    /// Deviation and obstacle alert threshold.
    #[arg(long, default_value_t = 60.0, value_parser = positive_f64)]
    pub threshold_cm: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub lookahead: u64,
    #[arg(long, default_value_t = Orientation::PlanView, value_parser = parse_orientation)]
    pub orientation: Orientation,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A single route shape or all four.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeSelection {
    One(ShapeKind),
    All,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// straight, l, u, square or all.
    #[arg(long, value_parser = parse_shape)]
    pub shape: ShapeSelection,
    /// Lateral keyframe noise in map units.
    #[arg(long, default_value_t = 0.0, value_parser = non_negative_f64)]
    pub noise_sigma: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// Lookahead in keyframes.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub k: u64,
    /// First seed; runs use `seed..seed + seeds`.
    #[arg(long, env = "NAVSIM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Half-width of the straight band, as a sine of the turn angle.
    #[arg(long, default_value_t = GuidanceConfig::default().colinear_epsilon, value_parser = unit_open_f64)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub map: PathBuf,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long, default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value_t = 60.0, value_parser = positive_f64)]
    pub threshold_cm: f64,
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u64).range(1..))]
    pub lookahead: u64,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("must be greater than zero, got {s}"))
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v >= 0.0 {
        Ok(v)
    } else {
        Err(format!("must not be negative, got {s}"))
    }
}

fn unit_open_f64(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("must lie strictly between 0 and 1, got {s}"))
    }
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    s.parse()
}

fn parse_shape(s: &str) -> Result<ShapeSelection, String> {
    if s == "all" {
        Ok(ShapeSelection::All)
    } else {
        s.parse().map(ShapeSelection::One).map_err(|e| format!("{e}; expected straight, l, u, square or all"))
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_map(path: &Path) -> Result<WorldMap> {
    load_map(&read(path)?).with_context(|| format!("invalid map {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

/// Stores `reference_cm` in the map and returns the `<factor> cm/unit` line.
pub fn cmd_calibrate(args: &CalibrateArgs) -> Result<String> {
    let mut map = read_map(&args.map)?;
    let calib = ScaleCalibration::new(args.reference_cm)?;
    map.scale_reference_cm = Some(args.reference_cm);
    if let Some(v) = validate_map(&map).first() {
        bail!("calibrated map is invalid: {v}");
    }
    write(args.out.as_deref().unwrap_or(&args.map), &save_map(&map))?;
    Ok(format!("{} cm/unit\n", format_f64(calib.cm_per_unit())))
}

/// Fixture maps in `dir`, in file-name order.
pub fn load_fixture_dir(dir: &Path) -> Result<Vec<WorldMap>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("cannot read fixture directory {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    files.iter().map(|p| read_map(p)).collect()
}

pub fn cmd_tables(args: &TablesArgs) -> Result<String> {
    let maps = load_fixture_dir(&args.fixtures)?;
    let report = TablesReport::from_maps(&maps)?;
    Ok(if args.csv { report.render_csv() } else { report.render_text() })
}

pub fn replay_config(args: &ReplayArgs) -> GuidanceConfig {
    GuidanceConfig {
        deviation_threshold_cm: args.threshold_cm,
        obstacle_threshold_cm: args.threshold_cm,
        lookahead: args.lookahead as usize,
        orientation: args.orientation,
        ..GuidanceConfig::default()
    }
}

/// Header comment, then one guidance document per frame. Written to `--out`
/// when given (and an empty string returned), otherwise returned.
pub fn cmd_replay(args: &ReplayArgs) -> Result<String> {
    let map = read_map(&args.map)?;
    let log_bytes = read(&args.log)?;
    let frames = load_replay(&log_bytes).with_context(|| format!("invalid log {}", args.log.display()))?;
    bind_replay(&map, &frames).with_context(|| format!("log {} does not match the map", args.log.display()))?;
    let cfg = replay_config(args);
    let mut session = Session::start(map, cfg, SessionMode::Online)?;
    let outputs = run_replay(&mut session, &frames)?;

    let mut text = format!(
        "# threshold_cm={} lookahead={} orientation={}\n",
        format_f64(args.threshold_cm),
        args.lookahead,
        args.orientation
    );
    for o in &outputs {
        text.push_str(&o.to_json_line());
        text.push('\n');
    }
    match &args.out {
        Some(path) => {
            write(path, text.as_bytes())?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

/// Results of one `evaluate` invocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub summaries: Vec<MonteCarloSummary>,
}

impl Evaluation {
    pub fn reports(&self) -> impl Iterator<Item = &AccuracyReport> {
        self.summaries.iter().flat_map(|s| &s.reports)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for s in &self.summaries {
            for r in &s.reports {
                writeln!(out, "{}: {}/{} = {:.2}%", r.map_name, r.true_positives, r.total, r.accuracy_percent).unwrap();
            }
            if s.reports.len() > 1 {
                writeln!(
                    out,
                    "{} noise_sigma={}: {:.2} ± {:.2}% over {} seeds",
                    s.shape,
                    format_f64(s.noise_sigma),
                    s.mean_percent,
                    s.stddev_percent,
                    s.reports.len()
                )
                .unwrap();
            }
        }
        if self.summaries.len() > 1 {
            let reports: Vec<AccuracyReport> = self.reports().cloned().collect();
            let (weighted, unweighted) = overall_accuracy(&reports);
            writeln!(out, "overall: {weighted:.2}% weighted by keyframes, {unweighted:.2}% unweighted").unwrap();
        }
        out
    }
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Evaluation> {
    let cfg =
        GuidanceConfig { lookahead: args.k as usize, colinear_epsilon: args.epsilon, ..GuidanceConfig::default() };
    cfg.validate()?;
    let kinds = match args.shape {
        ShapeSelection::One(k) => vec![k],
        ShapeSelection::All => ShapeKind::ALL.to_vec(),
    };
    let seeds = args.seed..args.seed.checked_add(args.seeds).context("seed range overflows")?;
    let summaries = kinds
        .into_iter()
        .map(|k| monte_carlo(&PathShape::preset(k), args.noise_sigma, seeds.clone(), &cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Evaluation { summaries })
}

pub fn serve_config(args: &ServeArgs) -> GuidanceConfig {
    GuidanceConfig {
        deviation_threshold_cm: args.threshold_cm,
        obstacle_threshold_cm: args.threshold_cm,
        lookahead: args.lookahead as usize,
        ..GuidanceConfig::default()
    }
}

/// Runs a subcommand, writing its data to `stdout`. `serve` blocks until the
/// server stops.
pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> Result<()> {
    match cli.command {
        Command::Calibrate(a) => stdout.write_all(cmd_calibrate(&a)?.as_bytes())?,
        Command::Tables(a) => stdout.write_all(cmd_tables(&a)?.as_bytes())?,
        Command::Replay(a) => stdout.write_all(cmd_replay(&a)?.as_bytes())?,
        Command::Evaluate(a) => stdout.write_all(cmd_evaluate(&a)?.render().as_bytes())?,
        Command::Serve(a) => {
            let map = read_map(&a.map)?;
            let handle = serve(map, serve_config(&a), (a.host.as_str(), a.port))?;
            writeln!(stdout, "ws://{}", handle.local_addr())?;
            stdout.flush()?;
            handle.wait();
        }
    }
    Ok(())
}
