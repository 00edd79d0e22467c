use std::collections::BTreeMap;

use super::{fuse_detections, Branch, FusedDetection, Source, TrackSnapshot, Tracker, TrackerConfig};
use crate::association::match_radar_camera;
use crate::calibration::{project_to_ground, CalibrationModel};
use crate::detection::{CameraDetection, FramePair, SimilarityProvider};
use crate::error::Result;
use crate::geometry::{polar_to_cartesian, Point2};

/// Ground positions of the camera detections that project cleanly, with their
/// index in `camera`.
pub fn camera_ground_positions<'a>(
    camera: &'a [CameraDetection],
    calib: &CalibrationModel,
) -> Vec<(usize, &'a CameraDetection, Point2<f64>)> {
    camera
        .iter()
        .enumerate()
        .filter_map(|(j, det)| {
            project_to_ground(calib, det.anchor)
                .ok()
                .map(|g| (j, det, g))
        })
        .collect()
}

/// Radar-only, camera-only and fusion trackers fed from the same frames.
///
/// When one sensor delivers nothing the fusion branch simply runs on the
/// other; detections without a category pass the category gate, so tracks
/// keep the category they already had.
pub struct FusionTracker {
    radar: Option<Tracker>,
    camera: Option<Tracker>,
    fusion: Option<Tracker>,
    cfg: TrackerConfig,
    provider: Box<dyn SimilarityProvider + Send + Sync>,
}

impl FusionTracker {
    pub fn new(
        cfg: TrackerConfig,
        provider: Box<dyn SimilarityProvider + Send + Sync>,
        branches: &[Branch],
    ) -> Result<Self> {
        let make = |b: Branch| -> Result<Option<Tracker>> {
            branches.contains(&b).then(|| Tracker::new(b, cfg)).transpose()
        };
        Ok(Self {
            radar: make(Branch::Radar)?,
            camera: make(Branch::Camera)?,
            fusion: make(Branch::Fusion)?,
            cfg,
            provider,
        })
    }

    pub fn tracker(&self, branch: Branch) -> Option<&Tracker> {
        match branch {
            Branch::Radar => self.radar.as_ref(),
            Branch::Camera => self.camera.as_ref(),
            Branch::Fusion => self.fusion.as_ref(),
        }
    }

    /// Runs every enabled branch on `frame`; snapshots come in radar, camera,
    /// fusion order.
    pub fn step(&mut self, frame: &FramePair, calib: &CalibrationModel) -> Vec<TrackSnapshot> {
        let projected = camera_ground_positions(&frame.camera, calib);
        let radar_ground: Vec<(usize, Point2<f64>)> = frame
            .radar
            .iter()
            .enumerate()
            .filter_map(|(i, d)| polar_to_cartesian(d.position).ok().map(|p| (i, p)))
            .collect();

        let mut out = Vec::with_capacity(3);
        if let Some(tracker) = &mut self.radar {
            let dets: Vec<FusedDetection> = radar_ground
                .iter()
                .map(|&(i, p)| FusedDetection {
                    position: p,
                    category: frame.radar[i].category.clone(),
                    source: Source::Radar,
                    radar_index: Some(i),
                    camera_index: None,
                })
                .collect();
            tracker.step(frame.t, &dets);
            out.push(tracker.snapshot());
        }
        if let Some(tracker) = &mut self.camera {
            let dets: Vec<FusedDetection> = projected
                .iter()
                .map(|&(j, det, p)| FusedDetection {
                    position: p,
                    category: Some(det.category.clone()),
                    source: Source::Camera,
                    radar_index: None,
                    camera_index: Some(j),
                })
                .collect();
            tracker.step(frame.t, &dets);
            out.push(tracker.snapshot());
        }
        if let Some(tracker) = &mut self.fusion {
            let camera_ground: Vec<(&CameraDetection, Point2<f64>)> =
                projected.iter().map(|&(_, det, p)| (det, p)).collect();
            let m = match_radar_camera(
                &frame.radar,
                &camera_ground,
                self.provider.as_ref(),
                &self.cfg.fusion_match(),
            );
            let mut dets = fuse_detections(&m, &frame.radar, &camera_ground);
            for d in &mut dets {
                d.camera_index = d.camera_index.map(|k| projected[k].0);
            }
            tracker.step(frame.t, &dets);
            out.push(tracker.snapshot());
        }
        out
    }
}

/// Runs a fresh tracker over a whole sequence and returns the snapshots of
/// each requested branch, in frame order.
pub fn track_sequence(
    frames: &[FramePair],
    calib: &CalibrationModel,
    cfg: TrackerConfig,
    provider: Box<dyn SimilarityProvider + Send + Sync>,
    branches: &[Branch],
) -> Result<BTreeMap<Branch, Vec<TrackSnapshot>>> {
    let mut tracker = FusionTracker::new(cfg, provider, branches)?;
    let mut out: BTreeMap<Branch, Vec<TrackSnapshot>> = BTreeMap::new();
    for frame in frames {
        for snap in tracker.step(frame, calib) {
            out.entry(snap.branch).or_default().push(snap);
        }
    }
    Ok(out)
}
