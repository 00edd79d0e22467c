//! Kalman tracking, track lifecycle and decision-level fusion.

mod branches;
mod kalman;

pub use branches::{camera_ground_positions, track_sequence, FusionTracker};
pub use kalman::{kf_predict, kf_update, KalmanState, Mat4};

use serde::{Deserialize, Serialize};

use crate::association::{match_detections_to_tracks, AssociationConfig, FusionMatchConfig, MatchResult, TrackAssignment};
use crate::detection::{CameraDetection, RadarDetection};
use crate::error::{Error, Result};
use crate::geometry::{polar_to_cartesian, Point2};

/// Which sensor produced a detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Radar,
    Camera,
    Fused,
}

/// One of the three parallel trackers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Radar,
    Camera,
    Fusion,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Radar, Branch::Camera, Branch::Fusion];

    pub fn name(self) -> &'static str {
        match self {
            Branch::Radar => "radar",
            Branch::Camera => "camera",
            Branch::Fusion => "fusion",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "radar" => Ok(Branch::Radar),
            "camera" => Ok(Branch::Camera),
            "fusion" => Ok(Branch::Fusion),
            other => Err(Error::invalid(format!("unknown branch '{other}'"))),
        }
    }
}

/// A ground-plane detection ready for tracking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedDetection {
    pub position: Point2<f64>,
    pub category: Option<String>,
    pub source: Source,
    pub radar_index: Option<usize>,
    pub camera_index: Option<usize>,
}

/// Combines a radar/camera match into detections.
///
/// Matched pairs take the radar position and the camera category; unmatched
/// detections keep what their own sensor provides. Output order: matched
/// pairs, unmatched radar, unmatched camera.
pub fn fuse_detections(
    m: &MatchResult,
    radar: &[RadarDetection],
    camera_ground: &[(&CameraDetection, Point2<f64>)],
) -> Vec<FusedDetection> {
    let mut out = Vec::with_capacity(m.matched.len() + m.unmatched_radar.len() + m.unmatched_camera.len());
    for pair in &m.matched {
        if let Ok(position) = polar_to_cartesian(radar[pair.radar].position) {
            out.push(FusedDetection {
                position,
                category: Some(camera_ground[pair.camera].0.category.clone()),
                source: Source::Fused,
                radar_index: Some(pair.radar),
                camera_index: Some(pair.camera),
            });
        }
    }
    for &i in &m.unmatched_radar {
        if let Ok(position) = polar_to_cartesian(radar[i].position) {
            out.push(FusedDetection {
                position,
                category: radar[i].category.clone(),
                source: Source::Radar,
                radar_index: Some(i),
                camera_index: None,
            });
        }
    }
    for &j in &m.unmatched_camera {
        let (det, position) = camera_ground[j];
        out.push(FusedDetection {
            position,
            category: Some(det.category.clone()),
            source: Source::Camera,
            radar_index: None,
            camera_index: Some(j),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Deleted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub id: u64,
    pub state: KalmanState<f64>,
    pub category: Option<String>,
    pub status: TrackStatus,
    pub hits: u32,
    pub misses: u32,
    /// Frames since creation.
    pub age: u32,
    pub provenance: Branch,
    /// Time of the last measurement update.
    pub last_update: f64,
}

impl Track {
    pub fn position(&self) -> Point2<f64> {
        self.state.position()
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// White-acceleration standard deviation (m/s²).
    pub process_noise_accel: f64,
    pub meas_noise_radar: f64,
    pub meas_noise_camera: f64,
    pub confirm_hits: u32,
    pub max_misses: u32,
    pub gate_distance: f64,
    pub sim_threshold: f64,
    pub dist_threshold: f64,
    pub category_gating: bool,
    /// Velocity standard deviation (m/s) of a newly created track.
    pub init_velocity_std: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            process_noise_accel: 1.0,
            meas_noise_radar: 0.3,
            meas_noise_camera: 1.0,
            confirm_hits: 3,
            max_misses: 5,
            gate_distance: 3.0,
            sim_threshold: 0.8,
            dist_threshold: 3.0,
            category_gating: true,
            init_velocity_std: 5.0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("process_noise_accel", self.process_noise_accel),
            ("meas_noise_radar", self.meas_noise_radar),
            ("meas_noise_camera", self.meas_noise_camera),
            ("gate_distance", self.gate_distance),
            ("sim_threshold", self.sim_threshold),
            ("dist_threshold", self.dist_threshold),
            ("init_velocity_std", self.init_velocity_std),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.confirm_hits == 0 || self.max_misses == 0 {
            return Err(Error::InvalidConfig("confirm_hits and max_misses must be ≥ 1".into()));
        }
        if self.sim_threshold > 1.0 {
            return Err(Error::InvalidConfig("sim_threshold must be ≤ 1".into()));
        }
        Ok(())
    }

    pub fn association(&self) -> AssociationConfig {
        AssociationConfig {
            gate_distance: self.gate_distance,
            category_gating: self.category_gating,
        }
    }

    pub fn fusion_match(&self) -> FusionMatchConfig {
        FusionMatchConfig {
            sim_threshold: self.sim_threshold,
            dist_threshold: self.dist_threshold,
        }
    }

    pub fn meas_noise(&self, source: Source) -> f64 {
        match source {
            Source::Radar | Source::Fused => self.meas_noise_radar,
            Source::Camera => self.meas_noise_camera,
        }
    }
}

/// Applies one frame's assignment to the tracks.
///
/// Matched tracks are updated and may be confirmed, unmatched tracks
/// accumulate misses and are marked deleted past `max_misses`, and every
/// unmatched detection starts a tentative track. Tracks already marked
/// deleted are dropped.
pub fn manage_tracks(
    tracks: Vec<Track>,
    assignment: &TrackAssignment,
    detections: &[FusedDetection],
    t: f64,
    cfg: &TrackerConfig,
    next_id: &mut u64,
) -> Vec<Track> {
    let mut detection_of = vec![None; tracks.len()];
    for &(d, k) in &assignment.matched {
        detection_of[k] = Some(d);
    }
    let provenance = tracks.first().map(|t| t.provenance);
    let mut out = Vec::with_capacity(tracks.len() + assignment.unmatched_detections.len());
    for (mut track, det) in tracks.into_iter().zip(detection_of) {
        if track.status == TrackStatus::Deleted {
            continue;
        }
        match det {
            Some(d) => {
                let det = &detections[d];
                track.state = kf_update(&track.state, det.position, cfg.meas_noise(det.source));
                track.hits += 1;
                track.misses = 0;
                track.last_update = t;
                if det.category.is_some() {
                    track.category.clone_from(&det.category);
                }
                if track.hits >= cfg.confirm_hits {
                    track.status = TrackStatus::Confirmed;
                }
            }
            None => {
                track.misses += 1;
                if track.misses > cfg.max_misses {
                    track.status = TrackStatus::Deleted;
                }
            }
        }
        out.push(track);
    }
    for &d in &assignment.unmatched_detections {
        let det = &detections[d];
        let id = *next_id;
        *next_id += 1;
        out.push(Track {
            id,
            state: KalmanState::at_rest(det.position, cfg.meas_noise(det.source), cfg.init_velocity_std),
            category: det.category.clone(),
            status: if cfg.confirm_hits <= 1 {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            },
            hits: 1,
            misses: 0,
            age: 0,
            provenance: provenance.unwrap_or(match det.source {
                Source::Radar => Branch::Radar,
                Source::Camera => Branch::Camera,
                Source::Fused => Branch::Fusion,
            }),
            last_update: t,
        });
    }
    out
}

/// Position of a reported track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackReport {
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub vx: f64,
    pub vy: f64,
    pub category: Option<String>,
}

/// Tracks one branch reports for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackSnapshot {
    pub t: f64,
    pub branch: Branch,
    pub tracks: Vec<TrackReport>,
}

/// A single predict/associate/manage loop.
#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    branch: Branch,
    tracks: Vec<Track>,
    next_id: u64,
    last_t: Option<f64>,
}

impl Tracker {
    pub fn new(branch: Branch, cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            branch,
            tracks: Vec::new(),
            next_id: 1,
            last_t: None,
        })
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    /// Live tracks, plus any marked deleted by the latest step.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Processes the detections of the frame at time `t`.
    pub fn step(&mut self, t: f64, detections: &[FusedDetection]) -> TrackAssignment {
        let dt = self.last_t.map_or(0.0, |last| t - last);
        self.last_t = Some(t);
        self.tracks.retain(|tr| tr.status != TrackStatus::Deleted);
        for track in &mut self.tracks {
            track.state = kf_predict(&track.state, dt, self.cfg.process_noise_accel);
            track.age += 1;
        }
        let assignment = match_detections_to_tracks(detections, &self.tracks, &self.cfg.association());
        let tracks = std::mem::take(&mut self.tracks);
        let first_new = self.next_id;
        self.tracks = manage_tracks(tracks, &assignment, detections, t, &self.cfg, &mut self.next_id);
        for track in self.tracks.iter_mut().filter(|tr| tr.id >= first_new) {
            track.provenance = self.branch;
        }
        assignment
    }

    /// Confirmed tracks updated in the latest frame.
    pub fn snapshot(&self) -> TrackSnapshot {
        let t = self.last_t.unwrap_or(0.0);
        TrackSnapshot {
            t,
            branch: self.branch,
            tracks: self
                .tracks
                .iter()
                .filter(|tr| tr.is_confirmed() && tr.misses == 0)
                .map(|tr| TrackReport {
                    id: tr.id,
                    x: tr.state.x[0],
                    y: tr.state.x[1],
                    vx: tr.state.x[2],
                    vy: tr.state.x[3],
                    category: tr.category.clone(),
                })
                .collect(),
        }
    }
}
