//! Detections, embeddings, frames and the radar/camera similarity contract.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

/// Dimension of the cross-modal appearance embedding.
pub const EMBEDDING_DIM: usize = 128;

/// Default tolerance when pairing radar and camera frames, in seconds.
pub const DEFAULT_MAX_SKEW: f64 = 0.05;

/// Axis-aligned box. Pixels for camera detections; for radar detections `x` is
/// azimuth (rad) and `y` is range (m) on the range-azimuth plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BoundingBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Result<Self> {
        if ![x1, y1, x2, y2].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid("bounding box must be finite"));
        }
        if x1 > x2 || y1 > y2 {
            return Err(Error::invalid(format!(
                "bounding box corners out of order: ({x1}, {y1}, {x2}, {y2})"
            )));
        }
        Ok(Self { x1, y1, x2, y2 })
    }

    pub fn center(&self) -> Point2<f64> {
        Point2::new((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }
}

impl TryFrom<[f64; 4]> for BoundingBox {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x1, b.y1, b.x2, b.y2]
    }
}

/// Image anchor of a detection: the middle of the bottom edge.
pub fn lower_center(bbox: &BoundingBox) -> Point2<f64> {
    Point2::new((bbox.x1 + bbox.x2) / 2.0, bbox.y2)
}

/// Fixed-length appearance vector shared by both modalities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Embedding(Vec<f64>);

impl Embedding {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != EMBEDDING_DIM {
            return Err(Error::invalid(format!(
                "embedding has dimension {}, expected {EMBEDDING_DIM}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("embedding must be finite"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean distance between the unit-normalized vectors.
    pub fn normalized_distance(&self, other: &Self) -> Result<f64> {
        let (na, nb) = (self.norm(), other.norm());
        if na == 0.0 || nb == 0.0 {
            return Err(Error::invalid("cannot normalize a zero embedding"));
        }
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| {
                let d = a / na - b / nb;
                d * d
            })
            .sum::<f64>()
            .sqrt())
    }
}

impl TryFrom<Vec<f64>> for Embedding {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Embedding> for Vec<f64> {
    fn from(e: Embedding) -> Self {
        e.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CameraDetection {
    pub bbox: BoundingBox,
    pub anchor: Point2<f64>,
    pub category: String,
    pub confidence: f64,
    pub embedding: Option<Embedding>,
}

impl CameraDetection {
    pub fn new(
        bbox: BoundingBox,
        category: impl Into<String>,
        confidence: f64,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&confidence) {
            return Err(Error::invalid(format!("confidence {confidence} outside [0, 1]")));
        }
        Ok(Self {
            anchor: lower_center(&bbox),
            bbox,
            category: category.into(),
            confidence,
            embedding,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadarDetection {
    /// Polar position `(r, θ)`.
    pub position: Point2<f64>,
    pub bbox: BoundingBox,
    pub category: Option<String>,
    pub embedding: Option<Embedding>,
}

impl RadarDetection {
    pub fn new(
        position: Point2<f64>,
        bbox: BoundingBox,
        category: Option<String>,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        if !position.is_finite() || position.r() < 0.0 {
            return Err(Error::invalid(format!(
                "invalid radar range {}",
                position.r()
            )));
        }
        if position.theta().abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::invalid(format!(
                "radar azimuth {} outside (-π/2, π/2)",
                position.theta()
            )));
        }
        Ok(Self {
            position,
            bbox,
            category,
            embedding,
        })
    }

    /// Detection whose position is the center of its range-azimuth box.
    pub fn from_bbox(
        bbox: BoundingBox,
        category: Option<String>,
        embedding: Option<Embedding>,
    ) -> Result<Self> {
        let c = bbox.center();
        Self::new(Point2::polar(c.y(), c.x()), bbox, category, embedding)
    }
}

/// Time-stamped detections from a single sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame<D> {
    pub timestamp: f64,
    pub detections: Vec<D>,
}

/// Time-aligned radar and camera detections.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FramePair {
    pub t: f64,
    pub radar: Vec<RadarDetection>,
    pub camera: Vec<CameraDetection>,
}

/// Confidence that a radar and a camera detection are the same object.
pub trait SimilarityProvider {
    /// Score in `[0, 1]`, symmetric, non-increasing in embedding distance.
    fn similarity(&self, radar: &Embedding, camera: &Embedding) -> Result<f64>;

    /// Score for detections that may lack embeddings; missing embeddings score 0.
    fn score(&self, radar: Option<&Embedding>, camera: Option<&Embedding>) -> f64 {
        match (radar, camera) {
            (Some(r), Some(c)) => self.similarity(r, c).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

/// Logistic score `1 / (1 + exp(k·(d − d₀)))` of the normalized embedding distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticSimilarity {
    pub steepness: f64,
    pub midpoint: f64,
}

impl Default for LogisticSimilarity {
    fn default() -> Self {
        Self {
            steepness: 10.0,
            midpoint: 0.5,
        }
    }
}

impl LogisticSimilarity {
    pub fn score_distance(&self, d: f64) -> f64 {
        1.0 / (1.0 + (self.steepness * (d - self.midpoint)).exp())
    }
}

impl SimilarityProvider for LogisticSimilarity {
    fn similarity(&self, radar: &Embedding, camera: &Embedding) -> Result<f64> {
        Ok(self.score_distance(radar.normalized_distance(camera)?))
    }
}

/// Pairs radar and camera frames by nearest timestamp.
///
/// Candidate pairs within `max_skew` are taken greedily in order of increasing
/// skew (ties by radar then camera index); each frame is used at most once.
/// Output is ordered by radar timestamp and stamped with it.
pub fn pair_frames(
    radar: &[SensorFrame<RadarDetection>],
    camera: &[SensorFrame<CameraDetection>],
    max_skew: f64,
) -> Result<Vec<FramePair>> {
    let chosen = pair_frame_indices(
        &radar.iter().map(|f| f.timestamp).collect::<Vec<_>>(),
        &camera.iter().map(|f| f.timestamp).collect::<Vec<_>>(),
        max_skew,
    )?;
    Ok(chosen
        .into_iter()
        .map(|(i, j)| FramePair {
            t: radar[i].timestamp,
            radar: radar[i].detections.clone(),
            camera: camera[j].detections.clone(),
        })
        .collect())
}

/// Index form of [`pair_frames`]: `(radar_index, camera_index)` sorted by radar index.
pub fn pair_frame_indices(
    radar_ts: &[f64],
    camera_ts: &[f64],
    max_skew: f64,
) -> Result<Vec<(usize, usize)>> {
    check_sorted(radar_ts, "radar")?;
    check_sorted(camera_ts, "camera")?;
    if !(max_skew >= 0.0) {
        return Err(Error::invalid("max_skew must be non-negative"));
    }

    let mut candidates = Vec::new();
    for (i, &rt) in radar_ts.iter().enumerate() {
        // camera stream is sorted, so only a window around rt can qualify
        let lo = camera_ts.partition_point(|&ct| ct < rt - max_skew);
        for (j, &ct) in camera_ts.iter().enumerate().skip(lo) {
            if ct > rt + max_skew {
                break;
            }
            let skew = (ct - rt).abs();
            if skew <= max_skew {
                candidates.push((skew, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut radar_used = vec![false; radar_ts.len()];
    let mut camera_used = vec![false; camera_ts.len()];
    let mut chosen = Vec::new();
    for (_, i, j) in candidates {
        if !radar_used[i] && !camera_used[j] {
            radar_used[i] = true;
            camera_used[j] = true;
            chosen.push((i, j));
        }
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn check_sorted(ts: &[f64], name: &str) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &t in ts {
        if !t.is_finite() {
            return Err(Error::invalid(format!("{name} stream has a non-finite timestamp")));
        }
        if t < prev {
            return Err(Error::invalid(format!("{name} stream is not sorted by timestamp")));
        }
        prev = t;
    }
    Ok(())
}
