//! File formats: frame, track and ground-truth logs (JSON Lines), calibration
//! and report files (JSON), run configuration, and SVG/CSV plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationConfig, CalibrationModel, CalibrationStats, DEFAULT_SPLIT_FRACTION};
use crate::detection::{BoundingBox, CameraDetection, Embedding, FramePair, RadarDetection};
use crate::error::{Error, Result};
use crate::geometry::{Homography, Point2};
use crate::metrics::{ClearReport, MetricsConfig};
use crate::simulator::{GtFrame, Scenario, SensorNoiseModel};
use crate::tracking::{Branch, TrackSnapshot, TrackerConfig};

// ── atomic writes ────────────────────────────────────────────────────────────

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

// ── JSON Lines ───────────────────────────────────────────────────────────────

/// Parses one record per non-blank line. Invalid JSON is a parse error;
/// valid JSON of the wrong shape is a schema error. Lines count from 1.
pub fn parse_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>> {
    parse_jsonl_with(reader, Ok)
}

/// Like [`parse_jsonl`], with a conversion whose errors are reported as
/// schema errors on the record's line.
fn parse_jsonl_with<T: DeserializeOwned, U>(
    reader: impl BufRead,
    convert: impl Fn(T) -> Result<U>,
) -> Result<Vec<U>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let parse_err = |message: String| Error::Parse { line: line_no, message };
        let schema_err = |message: String| Error::Schema { line: line_no, message };
        let line = line.map_err(|e| parse_err(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        let record = serde_json::from_value(value).map_err(|e| schema_err(e.to_string()))?;
        out.push(convert(record).map_err(|e| schema_err(e.to_string()))?);
    }
    Ok(out)
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::invalid(e.to_string()))?);
        out.push('\n');
    }
    Ok(out)
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(BufReader::new(f))
}

fn write_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<()> {
    write_atomic(path, to_jsonl(records)?.as_bytes())
}

// ── frame log ────────────────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct RadarRecord {
    r: f64,
    theta: f64,
    bbox: [f64; 4],
    #[serde(default)]
    category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CameraRecord {
    bbox: [f64; 4],
    category: String,
    confidence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    embedding: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameRecord {
    t: f64,
    radar: Vec<RadarRecord>,
    camera: Vec<CameraRecord>,
}

impl From<&FramePair> for FrameRecord {
    fn from(f: &FramePair) -> Self {
        Self {
            t: f.t,
            radar: f
                .radar
                .iter()
                .map(|d| RadarRecord {
                    r: d.position.r(),
                    theta: d.position.theta(),
                    bbox: d.bbox.into(),
                    category: d.category.clone(),
                    embedding: d.embedding.clone().map(Into::into),
                })
                .collect(),
            camera: f
                .camera
                .iter()
                .map(|d| CameraRecord {
                    bbox: d.bbox.into(),
                    category: d.category.clone(),
                    confidence: d.confidence,
                    embedding: d.embedding.clone().map(Into::into),
                })
                .collect(),
        }
    }
}

impl FrameRecord {
    fn into_frame(self) -> Result<FramePair> {
        let embedding = |e: Option<Vec<f64>>| e.map(Embedding::new).transpose();
        let bbox = |b: [f64; 4]| BoundingBox::new(b[0], b[1], b[2], b[3]);
        let radar = self
            .radar
            .into_iter()
            .map(|d| {
                RadarDetection::new(Point2::polar(d.r, d.theta), bbox(d.bbox)?, d.category, embedding(d.embedding)?)
            })
            .collect::<Result<_>>()?;
        let camera = self
            .camera
            .into_iter()
            .map(|d| CameraDetection::new(bbox(d.bbox)?, d.category, d.confidence, embedding(d.embedding)?))
            .collect::<Result<_>>()?;
        if !self.t.is_finite() {
            return Err(Error::invalid("frame time must be finite"));
        }
        Ok(FramePair {
            t: self.t,
            radar,
            camera,
        })
    }
}

pub fn parse_frames(reader: impl BufRead) -> Result<Vec<FramePair>> {
    parse_jsonl_with(reader, FrameRecord::into_frame)
}

pub fn read_frames(path: &Path) -> Result<Vec<FramePair>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_frames(BufReader::new(f))
}

pub fn write_frames(frames: &[FramePair], path: &Path) -> Result<()> {
    let records: Vec<FrameRecord> = frames.iter().map(FrameRecord::from).collect();
    write_jsonl(&records, path)
}

// ── track and ground-truth logs ──────────────────────────────────────────────

pub fn read_tracks(path: &Path) -> Result<Vec<TrackSnapshot>> {
    read_jsonl(path)
}

pub fn write_tracks(snapshots: &[TrackSnapshot], path: &Path) -> Result<()> {
    write_jsonl(snapshots, path)
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<GtFrame>> {
    read_jsonl(path)
}

pub fn write_ground_truth(frames: &[GtFrame], path: &Path) -> Result<()> {
    write_jsonl(frames, path)
}

/// Snapshots of one branch, in file order.
pub fn branch_snapshots(snapshots: &[TrackSnapshot], branch: Branch) -> Vec<TrackSnapshot> {
    snapshots.iter().filter(|s| s.branch == branch).cloned().collect()
}

// ── calibration file ─────────────────────────────────────────────────────────

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CalibrationFile {
    image_width: u32,
    image_height: u32,
    #[serde(default = "default_split")]
    split_fraction: f64,
    h_upper: [f64; 9],
    #[serde(default)]
    h_lower: Option<[f64; 9]>,
    #[serde(default)]
    stats: CalibrationStats,
}

fn default_split() -> f64 {
    DEFAULT_SPLIT_FRACTION
}

fn stored_homography(name: &str, h: [f64; 9]) -> Result<Homography<f64>> {
    if h[8].abs() <= 1e-12 {
        return Err(Error::InvalidCalibration(format!("{name} has h33 = 0")));
    }
    Homography::from_row_major(h).map_err(|e| Error::InvalidCalibration(format!("{name}: {e}")))
}

/// Reads a calibration. A file without `h_lower` holds one homography for the
/// whole image and is flagged as legacy.
pub fn parse_calibration(text: &str) -> Result<CalibrationModel> {
    let file: CalibrationFile =
        serde_json::from_str(text).map_err(|e| Error::InvalidCalibration(e.to_string()))?;
    let h_upper = stored_homography("h_upper", file.h_upper)?;
    let mut stats = file.stats;
    let h_lower = match file.h_lower {
        Some(h) => stored_homography("h_lower", h)?,
        None => {
            stats.legacy = true;
            h_upper
        }
    };
    let model = CalibrationModel {
        image_width: file.image_width,
        image_height: file.image_height,
        split_fraction: file.split_fraction,
        h_upper,
        h_lower,
        stats,
    };
    model.validate()?;
    Ok(model)
}

pub fn read_calibration(path: &Path) -> Result<CalibrationModel> {
    parse_calibration(&read_to_string(path)?)
}

pub fn write_calibration(model: &CalibrationModel, path: &Path) -> Result<()> {
    write_json(model, path)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

// ── report ───────────────────────────────────────────────────────────────────

/// Contents of `report.json`: one CLEAR-MOT report per evaluated branch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dist_threshold: f64,
    pub branches: BTreeMap<Branch, ClearReport>,
}

pub fn write_report(report: &EvaluationReport, path: &Path) -> Result<()> {
    write_json(report, path)
}

pub fn read_report(path: &Path) -> Result<EvaluationReport> {
    serde_json::from_str(&read_to_string(path)?).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

// ── run configuration ────────────────────────────────────────────────────────

/// Which branches a run tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Radar,
    Camera,
    #[default]
    Fusion,
    All,
}

impl Mode {
    pub fn branches(self) -> Vec<Branch> {
        match self {
            Mode::Radar => vec![Branch::Radar],
            Mode::Camera => vec![Branch::Camera],
            Mode::Fusion => vec![Branch::Fusion],
            Mode::All => Branch::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub calibration: CalibrationConfig,
    pub tracker: TrackerConfig,
    pub noise: SensorNoiseModel,
    pub metrics: MetricsConfig,
    pub seed: u64,
    pub mode: Mode,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.calibration.validate()?;
        self.tracker.validate()?;
        self.noise.validate()?;
        self.metrics.validate()
    }
}

pub fn parse_run_config(text: &str) -> Result<RunConfig> {
    let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn read_run_config(path: &Path) -> Result<RunConfig> {
    parse_run_config(&read_to_string(path)?)
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    let s: Scenario = serde_json::from_str(&read_to_string(path)?)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    s.validate()?;
    Ok(s)
}

// ── plots ────────────────────────────────────────────────────────────────────

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2",
];

/// Bird's-eye trajectory plot: one solid polyline per track id and one dashed
/// polyline per ground-truth id, `x` to the right and `y` up.
pub fn render_trajectories_svg(tracks: &[TrackSnapshot], gt: &[GtFrame]) -> String {
    let mut track_paths: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for snap in tracks {
        for t in &snap.tracks {
            track_paths.entry(t.id).or_default().push((t.x, t.y));
        }
    }
    let mut gt_paths: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
    for frame in gt {
        for o in &frame.objects {
            gt_paths.entry(o.id).or_default().push((o.x, o.y));
        }
    }

    let points = track_paths.values().chain(gt_paths.values()).flatten();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in points {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x0 <= x1 && y0 <= y1) {
        (x0, x1, y0, y1) = (-10.0, 10.0, 0.0, 30.0);
    }
    let pad = 0.05 * (x1 - x0).max(y1 - y0).max(1.0);
    let (x0, x1, y0, y1) = (x0 - pad, x1 + pad, y0 - pad, y1 + pad);

    let (width, height, margin) = (640.0, 640.0, 50.0);
    let sx = (width - 2.0 * margin) / (x1 - x0);
    let sy = (height - 2.0 * margin) / (y1 - y0);
    let px = |x: f64| margin + (x - x0) * sx;
    let py = |y: f64| height - margin - (y - y0) * sy;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<g stroke="black" stroke-width="1"><line x1="{m}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}"/></g>"#,
        m = margin,
        b = height - margin,
        r = width - margin
    );
    let _ = writeln!(
        svg,
        r#"<g font-family="sans-serif" font-size="12"><text x="{:.1}" y="{:.1}" text-anchor="middle">x (m)</text><text x="15" y="{:.1}" transform="rotate(-90 15 {:.1})" text-anchor="middle">y (m)</text>"#,
        width / 2.0,
        height - 12.0,
        height / 2.0,
        height / 2.0
    );
    for (lo, hi, horizontal) in [(x0, x1, true), (y0, y1, false)] {
        for k in 0..=4 {
            let v = lo + (hi - lo) * f64::from(k) / 4.0;
            if horizontal {
                let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{v:.1}</text>"#, px(v), height - margin + 16.0);
            } else {
                let _ = writeln!(svg, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{v:.1}</text>"#, margin - 6.0, py(v) + 4.0);
            }
        }
    }
    svg.push_str("</g>\n");

    let polyline = |svg: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool, id: u64, kind: &str| {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline data-{kind}="{id}" points="{}" fill="none" stroke="{color}" stroke-width="{}"{dash}/>"#,
            coords.join(" "),
            if dashed { 1.0 } else { 2.0 }
        );
    };
    for (id, pts) in &gt_paths {
        polyline(&mut svg, pts, "#555555", true, *id, "gt");
    }
    for (id, pts) in &track_paths {
        polyline(&mut svg, pts, PALETTE[(*id as usize) % PALETTE.len()], false, *id, "track");
    }
    svg.push_str("</svg>\n");
    svg
}

/// Per-frame CLEAR-MOT counts as CSV.
pub fn frame_errors_csv(report: &ClearReport) -> String {
    let mut out = String::from("t,gt,hypotheses,matches,fp,fn,idsw,mean_dist\n");
    for f in &report.per_frame {
        let mean = if f.matches > 0 {
            format!("{}", f.dist_sum / f.matches as f64)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{mean}",
            f.t, f.gt, f.hypotheses, f.matches, f.fp, f.fn_, f.idsw
        );
    }
    out
}

pub fn write_text(text: &str, path: &Path) -> Result<()> {
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::EMBEDDING_DIM;

    fn sample_frame() -> FramePair {
        let emb = Embedding::new((0..EMBEDDING_DIM).map(|i| (i as f64 * 0.37).sin() / 3.0).collect()).unwrap();
        FramePair {
            t: 0.1 + 0.2,
            radar: vec![
                RadarDetection::new(
                    Point2::polar(12.345678901234567, -0.1),
                    BoundingBox::new(-0.12, 11.8, -0.08, 12.9).unwrap(),
                    None,
                    Some(emb.clone()),
                )
                .unwrap(),
                RadarDetection::new(
                    Point2::polar(7.0, 0.3),
                    BoundingBox::new(0.29, 6.5, 0.31, 7.5).unwrap(),
                    Some("car".into()),
                    None,
                )
                .unwrap(),
            ],
            camera: vec![CameraDetection::new(
                BoundingBox::new(600.5, 300.25, 640.0, 410.0).unwrap(),
                "person",
                0.93,
                Some(emb),
            )
            .unwrap()],
        }
    }

    #[test]
    fn empty_log_is_empty() {
        assert!(parse_frames(&b""[..]).unwrap().is_empty());
        assert!(parse_frames(&b"\n\n"[..]).unwrap().is_empty());
    }

    #[test]
    fn frame_round_trip() {
        let frames = vec![sample_frame(), FramePair { t: 0.4, ..Default::default() }];
        let text = to_jsonl(&frames.iter().map(FrameRecord::from).collect::<Vec<_>>()).unwrap();
        assert_eq!(parse_frames(text.as_bytes()).unwrap(), frames);
    }

    #[test]
    fn embedding_is_optional() {
        let line = r#"{"t":0.0,"radar":[{"r":10.0,"theta":0.0,"bbox":[-0.1,9.5,0.1,10.5]}],"camera":[{"bbox":[1,2,3,4],"category":"car","confidence":0.5}]}"#;
        let f = parse_frames(line.as_bytes()).unwrap();
        assert!(f[0].radar[0].embedding.is_none());
        assert!(f[0].radar[0].category.is_none());
        assert_eq!(f[0].camera[0].bbox, BoundingBox::new(1.0, 2.0, 3.0, 4.0).unwrap());
    }

    #[test]
    fn truncated_line_names_its_number() {
        let good = r#"{"t":0.0,"radar":[],"camera":[]}"#;
        let mut text = String::new();
        for _ in 0..6 {
            text.push_str(good);
            text.push('\n');
        }
        text.push_str(&good[..good.len() - 5]);
        text.push('\n');
        match parse_frames(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_is_a_schema_error() {
        let text = "{\"t\":0.0,\"radar\":[],\"camera\":[]}\n\n{\"t\":0.1,\"radar\":[]}\n";
        match parse_frames(text.as_bytes()) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected a schema error, got {other:?}"),
        }
        let bad_box = r#"{"t":0.0,"radar":[],"camera":[{"bbox":[5,2,3,4],"category":"car","confidence":0.5}]}"#;
        assert!(matches!(parse_frames(bad_box.as_bytes()), Err(Error::Schema { line: 1, .. })));
    }

    fn model() -> CalibrationModel {
        let hu = Homography::new([0.01, 0.2, -3.0, 0.001, -0.05, 30.0, 1e-5, 2e-3, 1.0]).unwrap();
        let hl = Homography::new([0.012, 0.18, -2.5, 0.002, -0.04, 25.0, 2e-5, 1e-3, 1.0]).unwrap();
        CalibrationModel {
            image_width: 1280,
            image_height: 720,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            h_upper: hu,
            h_lower: hl,
            stats: CalibrationStats {
                collected: 10,
                ..Default::default()
            },
        }
    }

    #[test]
    fn calibration_round_trip_is_bit_exact() {
        let m = model();
        let text = serde_json::to_string_pretty(&m).unwrap();
        let back = parse_calibration(&text).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.h_upper.as_array().iter().zip(m.h_upper.as_array()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn legacy_single_homography() {
        let text = r#"{"image_width": 1280, "image_height": 720, "h_upper": [1,0,0, 0,1,0, 0,0,1]}"#;
        let m = parse_calibration(text).unwrap();
        assert!(m.stats.legacy);
        assert_eq!(m.h_upper, m.h_lower);
        assert_eq!(m.split_fraction, DEFAULT_SPLIT_FRACTION);
    }

    #[test]
    fn degenerate_calibration_rejected() {
        let zero_h33 = r#"{"image_width": 1280, "image_height": 720, "h_upper": [1,0,0, 0,1,0, 0,0,0]}"#;
        assert!(matches!(parse_calibration(zero_h33), Err(Error::InvalidCalibration(_))));
        let singular = r#"{"image_width": 1280, "image_height": 720, "h_upper": [1,2,3, 2,4,6, 0,0,1], "h_lower": [1,0,0, 0,1,0, 0,0,1]}"#;
        assert!(matches!(parse_calibration(singular), Err(Error::InvalidCalibration(_))));
    }

    #[test]
    fn run_config_rejects_unknown_keys() {
        assert!(parse_run_config("{}").is_ok());
        assert!(parse_run_config(r#"{"tracker": {"confirm_hits": 2}, "mode": "all"}"#).is_ok());
        assert!(matches!(parse_run_config(r#"{"trackr": {}}"#), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            parse_run_config(r#"{"tracker": {"confirm_hit": 2}}"#),
            Err(Error::InvalidConfig(_))
        ));
        assert!(matches!(
            parse_run_config(r#"{"tracker": {"gate_distance": -1.0}}"#),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_text("first", &path).unwrap();
        write_text("second", &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "second");
        let leftovers: Vec<_> = fs::read_dir(dir.path()).unwrap().collect();
        assert_eq!(leftovers.len(), 1);
    }

    #[test]
    fn empty_plot_has_axes_only() {
        let svg = render_trajectories_svg(&[], &[]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("<line"));
        assert!(!svg.contains("<polyline"));
    }

    #[test]
    fn plot_has_one_polyline_per_id() {
        use crate::simulator::GtObject;
        use crate::tracking::TrackReport;
        let rep = |id, x| TrackReport {
            id,
            x,
            y: 10.0,
            vx: 0.0,
            vy: 0.0,
            category: None,
        };
        let tracks: Vec<_> = (0..3)
            .map(|k| TrackSnapshot {
                t: k as f64,
                branch: Branch::Fusion,
                tracks: vec![rep(1, k as f64), rep(4, -(k as f64))],
            })
            .collect();
        let gt = vec![GtFrame {
            t: 0.0,
            objects: vec![GtObject {
                id: 9,
                category: "car".into(),
                x: 0.0,
                y: 10.0,
            }],
        }];
        let svg = render_trajectories_svg(&tracks, &gt);
        assert_eq!(svg.matches("data-track=").count(), 2);
        assert_eq!(svg.matches("data-gt=").count(), 1);
        assert_eq!(svg.matches("stroke-dasharray").count(), 1);
    }
}
