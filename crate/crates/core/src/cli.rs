//! Command-line front end: `simulate`, `calibrate`, `track`, `evaluate`,
//! `plot` and the multi-seed `trials` harness.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::calibration::{calibrate, project_to_radar, CalibrationModel, RegionStats};
use crate::detection::{FramePair, LogisticSimilarity};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::io::{self, EvaluationReport, Mode, RunConfig};
use crate::metrics::{clear_mot, MetricsConfig};
use crate::simulator::{synthesize_scene, FailureWindow, GtFrame, Scenario, Sensor};
use crate::tracking::{Branch, FusionTracker, TrackSnapshot};

#[derive(Debug, Parser)]
#[command(name = "rcfusion", version, about = "Radar-camera fusion tracking toolkit")]
pub struct Cli {
    /// Display angles in degrees (files always store radians).
    #[arg(long, global = true)]
    pub degrees: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a detection log and ground truth from a scenario.
    Simulate(SimulateArgs),
    /// Estimate the image→radar calibration from a detection log.
    Calibrate(CalibrateArgs),
    /// Track objects through a detection log.
    Track(TrackArgs),
    /// Score a track log against ground truth with CLEAR-MOT.
    Evaluate(EvaluateArgs),
    /// Draw trajectories as SVG, optionally with per-frame errors as CSV.
    Plot(PlotArgs),
    /// Run simulate→calibrate→track→evaluate over many seeds.
    Trials(TrialsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Objects wandering between random waypoints.
    Random,
    /// A person and a car crossing closely.
    Crossing,
    /// Two objects moving apart.
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Radar,
    Camera,
    Fusion,
    All,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Radar => Mode::Radar,
            ModeArg::Camera => Mode::Camera,
            ModeArg::Fusion => Mode::Fusion,
            ModeArg::All => Mode::All,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Radar,
    Camera,
    Fusion,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Radar => Branch::Radar,
            BranchArg::Camera => Branch::Camera,
            BranchArg::Fusion => Branch::Fusion,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScenarioArgs {
    /// Scenario file (JSON); overrides --preset.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    pub preset: Preset,
    /// Number of objects for the random preset.
    #[arg(long, default_value_t = 6)]
    pub objects: usize,
    /// Duration in seconds for the random and pair presets.
    #[arg(long, default_value_t = 30.0)]
    pub duration: f64,
    /// Sensor blackout as SENSOR:START:END in seconds, e.g. camera:5:8. Repeatable.
    #[arg(long = "fail", value_parser = parse_failure)]
    pub failures: Vec<FailureWindow>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Run configuration (JSON); its `noise` and `seed` are used.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds the scenario layout and all sensor noise; overrides the config seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "frames.jsonl")]
    pub frames: PathBuf,
    #[arg(long, default_value = "gt.jsonl")]
    pub gt: PathBuf,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long, default_value = "frames.jsonl")]
    pub frames: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seeds the holdout split and RANSAC.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fit one homography for the whole image.
    #[arg(long)]
    pub single: bool,
    #[arg(long, default_value = "calib.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    #[arg(long, default_value = "frames.jsonl")]
    pub frames: PathBuf,
    #[arg(long, default_value = "calib.json")]
    pub calib: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Branches to run; defaults to the config's mode, else fusion.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long, default_value = "tracks.jsonl")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, default_value = "tracks.jsonl")]
    pub tracks: PathBuf,
    #[arg(long, default_value = "gt.jsonl")]
    pub gt: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Matching distance in meters; overrides the config.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long, default_value = "report.json")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long, default_value = "tracks.jsonl")]
    pub tracks: PathBuf,
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Branch to draw; defaults to fusion if present, else the first in the log.
    #[arg(long, value_enum)]
    pub branch: Option<BranchArg>,
    #[arg(long, default_value = "trajectories.svg")]
    pub out: PathBuf,
    /// Also write per-frame CLEAR-MOT counts here (needs --gt).
    #[arg(long, requires = "gt")]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 3.0)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct TrialsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of seeds.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long, default_value_t = 0)]
    pub first_seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    #[arg(long, default_value = "trials.json")]
    pub out: PathBuf,
}

fn parse_failure(s: &str) -> std::result::Result<FailureWindow, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [sensor, start, end] = parts[..] else {
        return Err("expected SENSOR:START:END".into());
    };
    let sensor = match sensor {
        "radar" => Sensor::Radar,
        "camera" => Sensor::Camera,
        other => return Err(format!("unknown sensor '{other}'")),
    };
    let t_start: f64 = start.parse().map_err(|e| format!("bad start time: {e}"))?;
    let t_end: f64 = end.parse().map_err(|e| format!("bad end time: {e}"))?;
    if !(t_start < t_end) {
        return Err("start must be before end".into());
    }
    Ok(FailureWindow {
        sensor,
        t_start,
        t_end,
    })
}

/// Parses `args` (including the program name) and runs the command.
/// Returns 0 on success, 2 on a usage error and 1 on a processing error.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let units = AngleUnits { degrees: cli.degrees };
    match &cli.command {
        Command::Simulate(a) => simulate(a, units),
        Command::Calibrate(a) => calibrate_cmd(a, units),
        Command::Track(a) => track(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Plot(a) => plot(a),
        Command::Trials(a) => trials(a),
    }
}

#[derive(Debug, Clone, Copy)]
struct AngleUnits {
    degrees: bool,
}

impl AngleUnits {
    fn show(self, rad: f64) -> String {
        if self.degrees {
            format!("{:.2}°", rad.to_degrees())
        } else {
            format!("{rad:.4} rad")
        }
    }
}

fn load_config(path: Option<&PathBuf>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), |p| io::read_run_config(p))
}

fn build_scenario(a: &ScenarioArgs, seed: u64) -> Result<Scenario> {
    match &a.scenario {
        Some(path) => io::read_scenario(path),
        None => {
            if !(a.duration > 0.0 && a.duration.is_finite()) {
                return Err(Error::InvalidConfig("duration must be positive".into()));
            }
            Ok(match a.preset {
                Preset::Random => Scenario::random_traffic(a.objects, a.duration, seed),
                Preset::Crossing => Scenario::crossing(),
                Preset::Pair => Scenario::pair(a.duration),
            })
        }
    }
}

fn provider() -> Box<LogisticSimilarity> {
    Box::new(LogisticSimilarity::default())
}

fn simulate(a: &SimulateArgs, units: AngleUnits) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let seed = a.seed.unwrap_or(cfg.seed);
    let scenario = build_scenario(&a.scenario, seed)?;
    let (frames, gt) = synthesize_scene(&scenario, &cfg.noise, &a.scenario.failures, seed)?;
    io::write_frames(&frames, &a.frames)?;
    io::write_ground_truth(&gt.frames, &a.gt)?;

    let radar: usize = frames.iter().map(|f| f.radar.len()).sum();
    let camera: usize = frames.iter().map(|f| f.camera.len()).sum();
    let (lo, hi) = frames
        .iter()
        .flat_map(|f| &f.radar)
        .map(|d| d.position.theta())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), th| (lo.min(th), hi.max(th)));
    println!(
        "{} frames, {} objects, {radar} radar and {camera} camera detections",
        frames.len(),
        scenario.objects.len()
    );
    if lo <= hi {
        println!("radar azimuth span: {} .. {}", units.show(lo), units.show(hi));
    }
    println!("wrote {} and {}", a.frames.display(), a.gt.display());
    Ok(())
}

fn region_line(name: &str, r: &RegionStats) -> String {
    let opt = |v: Option<f64>, unit: &str| v.map_or("n/a".to_string(), |v| format!("{v:.3} {unit}"));
    format!(
        "{name:<6} {:>6} {:>6} {:>8} {:>8} {:>12} {:>12}",
        r.correspondences,
        r.train,
        r.inliers,
        r.holdout,
        opt(r.holdout_error_m, "m"),
        opt(r.holdout_error_px, "px"),
    )
}

fn calibrate_cmd(a: &CalibrateArgs, units: AngleUnits) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let mut cal = cfg.calibration;
    if let Some(seed) = a.seed {
        cal.seed = seed;
        cal.ransac.seed = seed;
    }
    if a.single {
        cal.up_down = false;
    }
    let frames = io::read_frames(&a.frames)?;
    let model = calibrate(&frames, provider().as_ref(), &cal)?;
    io::write_calibration(&model, &a.out)?;

    let s = &model.stats;
    println!(
        "collected {} correspondences, {} after block sampling; {}{}",
        s.collected,
        s.sampled,
        if s.up_down { "two regions" } else { "single homography" },
        if s.fallback { " (fell back to a shared fit)" } else { "" }
    );
    println!("region  corrs  train  inliers  holdout   error (m)   error (px)");
    println!("{}", region_line("upper", &s.upper));
    println!("{}", region_line("lower", &s.lower));
    print_bottom_row_azimuths(&model, units);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn print_bottom_row_azimuths(model: &CalibrationModel, units: AngleUnits) {
    let v = f64::from(model.image_height) - 1.0;
    let left = project_to_radar(model, Point2::new(0.0, v));
    let right = project_to_radar(model, Point2::new(f64::from(model.image_width), v));
    if let (Ok(l), Ok(r)) = (left, right) {
        println!("bottom image row spans azimuth {} .. {}", units.show(l.theta()), units.show(r.theta()));
    }
}

/// Runs every branch of `mode` over `frames`; one snapshot per frame per
/// branch, in frame order and radar, camera, fusion order within a frame.
pub fn track_frames(frames: &[FramePair], calib: &CalibrationModel, cfg: &RunConfig, mode: Mode) -> Result<Vec<TrackSnapshot>> {
    let mut tracker = FusionTracker::new(cfg.tracker, provider(), &mode.branches())?;
    let mut out = Vec::with_capacity(frames.len() * mode.branches().len());
    for frame in frames {
        out.extend(tracker.step(frame, calib));
    }
    Ok(out)
}

fn track(a: &TrackArgs) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let mode = a.mode.map_or(cfg.mode, Mode::from);
    let frames = io::read_frames(&a.frames)?;
    let calib = io::read_calibration(&a.calib)?;
    let snapshots = track_frames(&frames, &calib, &cfg, mode)?;
    io::write_tracks(&snapshots, &a.out)?;
    for b in mode.branches() {
        let ids: std::collections::BTreeSet<u64> = snapshots
            .iter()
            .filter(|s| s.branch == b)
            .flat_map(|s| s.tracks.iter().map(|t| t.id))
            .collect();
        println!("{:<7} {} confirmed tracks reported", b.name(), ids.len());
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

/// Scores every branch present in `snapshots`.
pub fn evaluate_snapshots(snapshots: &[TrackSnapshot], gt: &[GtFrame], metrics: &MetricsConfig) -> Result<EvaluationReport> {
    let mut branches = BTreeMap::new();
    for b in Branch::ALL {
        let own = io::branch_snapshots(snapshots, b);
        if !own.is_empty() {
            branches.insert(b, clear_mot(gt, &own, metrics)?);
        }
    }
    if branches.is_empty() && !gt.is_empty() {
        return Err(Error::FrameMismatch(format!(
            "{} ground-truth frames but the track log is empty",
            gt.len()
        )));
    }
    Ok(EvaluationReport {
        dist_threshold: metrics.dist_threshold,
        branches,
    })
}

fn print_report(report: &EvaluationReport) {
    println!("branch     MOTA   MOTP (m)   FNR      FPR      IDSW   matches");
    for (b, r) in &report.branches {
        println!(
            "{:<7} {:>7.4} {:>9.4} {:>8.4} {:>8.4} {:>6} {:>9}",
            b.name(),
            r.mota,
            r.motp,
            r.fnr,
            r.fpr,
            r.idsw,
            r.matches
        );
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    let mut metrics = cfg.metrics;
    if let Some(t) = a.threshold {
        metrics.dist_threshold = t;
    }
    let snapshots = io::read_tracks(&a.tracks)?;
    let gt = io::read_ground_truth(&a.gt)?;
    let report = evaluate_snapshots(&snapshots, &gt, &metrics)?;
    io::write_report(&report, &a.out)?;
    print_report(&report);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn plot(a: &PlotArgs) -> Result<()> {
    let snapshots = io::read_tracks(&a.tracks)?;
    let branch = match a.branch {
        Some(b) => Branch::from(b),
        None if snapshots.iter().any(|s| s.branch == Branch::Fusion) => Branch::Fusion,
        None => snapshots.first().map_or(Branch::Fusion, |s| s.branch),
    };
    let own = io::branch_snapshots(&snapshots, branch);
    let gt = a.gt.as_ref().map(|p| io::read_ground_truth(p)).transpose()?.unwrap_or_default();
    io::write_text(&io::render_trajectories_svg(&own, &gt), &a.out)?;
    println!("wrote {}", a.out.display());
    if let Some(csv) = &a.csv {
        let metrics = MetricsConfig {
            dist_threshold: a.threshold,
        };
        let report = clear_mot(&gt, &own, &metrics)?;
        io::write_text(&io::frame_errors_csv(&report), csv)?;
        println!("wrote {}", csv.display());
    }
    Ok(())
}

/// simulate → calibrate → track (all branches) → evaluate, in memory.
pub fn run_pipeline(scenario: &Scenario, failures: &[FailureWindow], cfg: &RunConfig, seed: u64) -> Result<EvaluationReport> {
    let (frames, gt) = synthesize_scene(scenario, &cfg.noise, failures, seed)?;
    let model = calibrate(&frames, provider().as_ref(), &cfg.calibration)?;
    let snapshots = track_frames(&frames, &model, cfg, Mode::All)?;
    evaluate_snapshots(&snapshots, &gt.frames, &cfg.metrics)
}

/// Sample mean with the half-width of its 95 % Student-t interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanInterval {
    pub mean: f64,
    /// `None` with fewer than two samples.
    pub half_width: Option<f64>,
}

pub fn mean_interval(samples: &[f64]) -> Option<MeanInterval> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let half_width = (samples.len() >= 2).then(|| {
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("dof ≥ 1").inverse_cdf(0.975);
        t * (var / n).sqrt()
    });
    Some(MeanInterval { mean, half_width })
}

#[derive(Debug, Serialize)]
struct BranchSummary {
    mota: Option<MeanInterval>,
    motp: Option<MeanInterval>,
    fnr: Option<MeanInterval>,
    idsw: Option<MeanInterval>,
}

#[derive(Debug, Serialize)]
struct TrialsReport {
    seeds: Vec<u64>,
    summary: BTreeMap<Branch, BranchSummary>,
    runs: Vec<EvaluationReport>,
}

fn trials(a: &TrialsArgs) -> Result<()> {
    let cfg = load_config(a.config.as_ref())?;
    if a.seeds == 0 {
        return Err(Error::InvalidConfig("--seeds must be at least 1".into()));
    }
    let seeds: Vec<u64> = (a.first_seed..a.first_seed + a.seeds).collect();
    let jobs = match a.jobs {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    }
    .min(seeds.len());

    let run_one = |seed: u64| -> Result<EvaluationReport> {
        let scenario = build_scenario(&a.scenario, seed)?;
        run_pipeline(&scenario, &a.scenario.failures, &cfg, seed)
    };
    // Seeds are dealt round-robin to workers; results are put back in seed order.
    let mut results: Vec<Option<Result<EvaluationReport>>> = (0..seeds.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..jobs)
            .map(|w| {
                let seeds = &seeds;
                let run_one = &run_one;
                scope.spawn(move || {
                    (w..seeds.len())
                        .step_by(jobs)
                        .map(|k| (k, run_one(seeds[k])))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            for (k, r) in h.join().expect("trial worker panicked") {
                results[k] = Some(r);
            }
        }
    });
    let runs: Vec<EvaluationReport> = results
        .into_iter()
        .map(|r| r.expect("every seed ran"))
        .collect::<Result<_>>()?;

    let mut summary = BTreeMap::new();
    for b in Branch::ALL {
        let pick = |f: &dyn Fn(&crate::metrics::ClearReport) -> f64| -> Vec<f64> {
            runs.iter().filter_map(|r| r.branches.get(&b)).map(f).collect()
        };
        summary.insert(
            b,
            BranchSummary {
                mota: mean_interval(&pick(&|r| r.mota)),
                motp: mean_interval(&pick(&|r| r.motp)),
                fnr: mean_interval(&pick(&|r| r.fnr)),
                idsw: mean_interval(&pick(&|r| r.idsw as f64)),
            },
        );
    }

    let show = |m: &Option<MeanInterval>| match m {
        Some(MeanInterval {
            mean,
            half_width: Some(h),
        }) => format!("{mean:.4} ± {h:.4}"),
        Some(MeanInterval { mean, half_width: None }) => format!("{mean:.4}"),
        None => "n/a".into(),
    };
    println!("{} seeds ({} .. {}), mean ± 95% t-interval", seeds.len(), seeds[0], seeds[seeds.len() - 1]);
    println!("branch  {:<18} {:<18} {:<18} {:<18}", "MOTA", "MOTP (m)", "FNR", "IDSW");
    for (b, s) in &summary {
        println!(
            "{:<7} {:<18} {:<18} {:<18} {:<18}",
            b.name(),
            show(&s.mota),
            show(&s.motp),
            show(&s.fnr),
            show(&s.idsw)
        );
    }
    let report = TrialsReport { seeds, summary, runs };
    let mut text = serde_json::to_string_pretty(&report).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    io::write_text(&text, &a.out)?;
    println!("wrote {}", a.out.display());
    Ok(())
}
