//! Online targetless calibration from radar/camera common features.
//!
//! Matched detections yield (camera anchor, radar polar position)
//! correspondences. They are spatially decimated per frame, split at a fixed
//! image row into a distal (upper) and proximal (lower) region, and each region
//! gets its own image→polar homography.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{FramePair, SimilarityProvider};
use crate::error::{Error, Result};
use crate::geometry::{
    estimate_homography_ransac, inverse_reprojection_error, polar_to_cartesian,
    reprojection_error, residual, Homography, Point2, PointPair, RansacConfig, ResidualSpace,
};

pub const DEFAULT_SPLIT_FRACTION: f64 = 2.0 / 3.0;

/// An image anchor and the radar position believed to be the same object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correspondence {
    pub image_point: Point2<f64>,
    /// Polar `(r, θ)`.
    pub radar_point: Point2<f64>,
    pub t: f64,
    pub score: f64,
}

impl Correspondence {
    pub fn pair(&self) -> PointPair<f64> {
        PointPair::new(self.image_point, self.radar_point)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BlockSamplingConfig {
    /// Side of a square cell in pixels.
    pub block_size: u32,
    /// Width of a selected run of blocks, and of the gap after it.
    pub stride_blocks: u32,
}

impl Default for BlockSamplingConfig {
    fn default() -> Self {
        Self {
            block_size: 5,
            stride_blocks: 1,
        }
    }
}

impl BlockSamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_size == 0 || self.stride_blocks == 0 {
            return Err(Error::InvalidConfig(
                "block_size and stride_blocks must be ≥ 1".into(),
            ));
        }
        Ok(())
    }

    /// Checkerboard over runs of `stride_blocks` blocks.
    pub fn selects(&self, bx: i64, by: i64) -> bool {
        let s = i64::from(self.stride_blocks.max(1));
        (bx.div_euclid(s) + by.div_euclid(s)).rem_euclid(2) == 0
    }
}

/// Correspondences from one frame: pairs scoring above `threshold`, taken
/// greedily by descending score so each detection is used at most once.
pub fn collect_frame(
    frame: &FramePair,
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Vec<Correspondence> {
    let mut candidates = Vec::new();
    for (i, r) in frame.radar.iter().enumerate() {
        for (j, c) in frame.camera.iter().enumerate() {
            let s = provider.score(r.embedding.as_ref(), c.embedding.as_ref());
            if s > threshold {
                candidates.push((s, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut radar_used = vec![false; frame.radar.len()];
    let mut camera_used = vec![false; frame.camera.len()];
    let mut out = Vec::new();
    for (s, i, j) in candidates {
        if radar_used[i] || camera_used[j] {
            continue;
        }
        radar_used[i] = true;
        camera_used[j] = true;
        out.push(Correspondence {
            image_point: frame.camera[j].anchor,
            radar_point: frame.radar[i].position,
            t: frame.t,
            score: s,
        });
    }
    out
}

pub fn collect_correspondences(
    pairs: &[FramePair],
    provider: &dyn SimilarityProvider,
    threshold: f64,
) -> Vec<Correspondence> {
    pairs
        .iter()
        .flat_map(|f| collect_frame(f, provider, threshold))
        .collect()
}

/// Keeps at most one correspondence per selected block: the one nearest the
/// block center (ties: earlier `t`, then smaller image point). Points outside
/// the `width × height` image are dropped. Input order is preserved.
pub fn block_sample(
    corrs: &[Correspondence],
    cfg: &BlockSamplingConfig,
    width: u32,
    height: u32,
) -> Vec<Correspondence> {
    let bs = f64::from(cfg.block_size.max(1));
    let mut best: BTreeMap<(i64, i64), (usize, f64)> = BTreeMap::new();
    for (idx, c) in corrs.iter().enumerate() {
        let p = c.image_point;
        let inside = p.is_finite()
            && (0.0..=f64::from(width)).contains(&p.u())
            && (0.0..=f64::from(height)).contains(&p.v());
        if !inside {
            continue;
        }
        let bx = (p.u() / bs).floor() as i64;
        let by = (p.v() / bs).floor() as i64;
        if !cfg.selects(bx, by) {
            continue;
        }
        let center = Point2::new((bx as f64 + 0.5) * bs, (by as f64 + 0.5) * bs);
        let d = p.distance(&center);
        best.entry((bx, by))
            .and_modify(|(held, hd)| {
                let h = &corrs[*held];
                let better = d
                    .total_cmp(hd)
                    .then(c.t.total_cmp(&h.t))
                    .then(p.u().total_cmp(&h.image_point.u()))
                    .then(p.v().total_cmp(&h.image_point.v()))
                    .is_lt();
                if better {
                    *held = idx;
                    *hd = d;
                }
            })
            .or_insert((idx, d));
    }
    let mut keep: Vec<usize> = best.values().map(|&(i, _)| i).collect();
    keep.sort_unstable();
    keep.into_iter().map(|i| corrs[i]).collect()
}

/// `(upper, lower)`; rows `v < split_fraction·image_height` are upper.
pub fn split_up_down(
    corrs: &[Correspondence],
    image_height: u32,
    split_fraction: f64,
) -> (Vec<Correspondence>, Vec<Correspondence>) {
    let row = split_fraction * f64::from(image_height);
    corrs.iter().partition(|c| c.image_point.v() < row)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrationConfig {
    /// Minimum similarity for a correspondence (strict).
    pub sim_threshold: f64,
    pub block: BlockSamplingConfig,
    pub image_width: u32,
    pub image_height: u32,
    pub split_fraction: f64,
    /// Fit separate upper and lower homographies; otherwise a single one.
    pub up_down: bool,
    /// Share of each region withheld from fitting for error statistics.
    pub holdout_fraction: f64,
    pub ransac: RansacConfig<f64>,
    /// Seeds the holdout split.
    pub seed: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        Self {
            sim_threshold: 0.8,
            block: BlockSamplingConfig::default(),
            image_width: 1280,
            image_height: 720,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            up_down: true,
            holdout_fraction: 0.2,
            ransac: RansacConfig::default(),
            seed: 0,
        }
    }
}

impl CalibrationConfig {
    pub fn validate(&self) -> Result<()> {
        self.block.validate()?;
        self.ransac.validate()?;
        if !(0.0..=1.0).contains(&self.sim_threshold) {
            return Err(Error::InvalidConfig("sim_threshold must be in [0, 1]".into()));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidConfig("split_fraction must be in (0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(Error::InvalidConfig("holdout_fraction must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct RegionStats {
    pub correspondences: usize,
    pub train: usize,
    pub inliers: usize,
    pub holdout: usize,
    /// Held-out pairs within the inlier threshold of the fitted model.
    pub holdout_inliers: usize,
    /// RMS ground distance (m) over held-out inliers.
    pub holdout_error_m: Option<f64>,
    /// RMS image distance (px) of radar→camera reprojection over held-out inliers.
    pub holdout_error_px: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationStats {
    pub collected: usize,
    pub sampled: usize,
    pub up_down: bool,
    /// A region could not be fitted and both use one shared homography.
    pub fallback: bool,
    /// Read from a file holding a single homography.
    pub legacy: bool,
    pub upper: RegionStats,
    pub lower: RegionStats,
}

/// Two image→polar homographies split at a fixed image row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationModel {
    pub image_width: u32,
    pub image_height: u32,
    pub split_fraction: f64,
    pub h_upper: Homography<f64>,
    pub h_lower: Homography<f64>,
    #[serde(default)]
    pub stats: CalibrationStats,
}

impl CalibrationModel {
    /// Model using `h` for the whole image.
    pub fn single(h: Homography<f64>, image_width: u32, image_height: u32) -> Self {
        Self {
            image_width,
            image_height,
            split_fraction: DEFAULT_SPLIT_FRACTION,
            h_upper: h,
            h_lower: h,
            stats: CalibrationStats::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.split_fraction > 0.0 && self.split_fraction < 1.0) {
            return Err(Error::InvalidCalibration("split_fraction must be in (0, 1)".into()));
        }
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidCalibration("image dimensions must be positive".into()));
        }
        Ok(())
    }

    pub fn split_row(&self) -> f64 {
        self.split_fraction * f64::from(self.image_height)
    }

    pub fn homography_for(&self, p: Point2<f64>) -> &Homography<f64> {
        if p.v() < self.split_row() {
            &self.h_upper
        } else {
            &self.h_lower
        }
    }

    pub fn in_bounds(&self, p: Point2<f64>) -> bool {
        (0.0..=f64::from(self.image_width)).contains(&p.u())
            && (0.0..=f64::from(self.image_height)).contains(&p.v())
    }
}

/// Image pixel to radar polar `(r, θ)` through the region's homography.
pub fn project_to_radar(model: &CalibrationModel, p: Point2<f64>) -> Result<Point2<f64>> {
    model.homography_for(p).apply(p)
}

/// Image pixel to ground `(x, y)` meters.
pub fn project_to_ground(model: &CalibrationModel, p: Point2<f64>) -> Result<Point2<f64>> {
    polar_to_cartesian(project_to_radar(model, p)?)
}

/// RMS ground distance (m) between each projected `src` and its polar `dst`.
pub fn model_reprojection_error(model: &CalibrationModel, pairs: &[PointPair<f64>]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("reprojection error of an empty set"));
    }
    let mut sum = 0.0;
    for pair in pairs {
        let d = residual(
            project_to_radar(model, pair.src)?,
            pair.dst,
            ResidualSpace::PolarAsCartesian,
        );
        sum += d * d;
    }
    Ok((sum / pairs.len() as f64).sqrt())
}

/// Full pipeline: collect and block-sample per frame, then fit.
pub fn calibrate(
    pairs: &[FramePair],
    provider: &dyn SimilarityProvider,
    cfg: &CalibrationConfig,
) -> Result<CalibrationModel> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::invalid("no frames to calibrate from"));
    }
    let mut collected = 0;
    let mut sampled = Vec::new();
    for frame in pairs {
        let corrs = collect_frame(frame, provider, cfg.sim_threshold);
        collected += corrs.len();
        sampled.extend(block_sample(&corrs, &cfg.block, cfg.image_width, cfg.image_height));
    }
    let mut model = fit_model(&sampled, cfg)?;
    model.stats.collected = collected;
    Ok(model)
}

/// Fits a model to already-sampled correspondences.
///
/// Each region is split into train and holdout sets first so that the
/// two-region and single-homography fits are scored on the same pairs.
pub fn fit_model(corrs: &[Correspondence], cfg: &CalibrationConfig) -> Result<CalibrationModel> {
    cfg.validate()?;
    let (upper, lower) = split_up_down(corrs, cfg.image_height, cfg.split_fraction);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (upper_train, upper_hold) = holdout_split(&upper, cfg.holdout_fraction, &mut rng);
    let (lower_train, lower_hold) = holdout_split(&lower, cfg.holdout_fraction, &mut rng);

    let fit = |train: &[PointPair<f64>], offset: u64| {
        let rc = RansacConfig {
            seed: cfg.ransac.seed.wrapping_add(offset),
            ..cfg.ransac
        };
        estimate_homography_ransac(train, &rc)
    };

    let mut up_stats = RegionStats {
        correspondences: upper.len(),
        train: upper_train.len(),
        holdout: upper_hold.len(),
        ..Default::default()
    };
    let mut low_stats = RegionStats {
        correspondences: lower.len(),
        train: lower_train.len(),
        holdout: lower_hold.len(),
        ..Default::default()
    };

    let mut fallback = false;
    let regional = if cfg.up_down {
        match (fit(&upper_train, 0), fit(&lower_train, 1)) {
            (Ok(u), Ok(l)) => Some((u, l)),
            _ => {
                fallback = true;
                None
            }
        }
    } else {
        None
    };

    let (h_upper, h_lower) = match regional {
        Some((u, l)) => {
            up_stats.inliers = u.inlier_count();
            low_stats.inliers = l.inlier_count();
            (u.homography, l.homography)
        }
        None => {
            let all: Vec<_> = upper_train.iter().chain(&lower_train).copied().collect();
            let shared = fit(&all, 2).map_err(|e| {
                Error::CalibrationFailed(format!("shared homography could not be fitted: {e}"))
            })?;
            let n_up = upper_train.len();
            up_stats.inliers = shared.inliers[..n_up].iter().filter(|&&b| b).count();
            low_stats.inliers = shared.inliers[n_up..].iter().filter(|&&b| b).count();
            (shared.homography, shared.homography)
        }
    };

    let threshold = cfg.ransac.inlier_threshold;
    score_holdout(&mut up_stats, &upper_hold, &h_upper, threshold);
    score_holdout(&mut low_stats, &lower_hold, &h_lower, threshold);

    Ok(CalibrationModel {
        image_width: cfg.image_width,
        image_height: cfg.image_height,
        split_fraction: cfg.split_fraction,
        h_upper,
        h_lower,
        stats: CalibrationStats {
            collected: corrs.len(),
            sampled: corrs.len(),
            up_down: cfg.up_down,
            fallback,
            legacy: false,
            upper: up_stats,
            lower: low_stats,
        },
    })
}

fn holdout_split(
    corrs: &[Correspondence],
    fraction: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<PointPair<f64>>, Vec<PointPair<f64>>) {
    let mut idx: Vec<usize> = (0..corrs.len()).collect();
    idx.shuffle(rng);
    let n_hold = (corrs.len() as f64 * fraction).round() as usize;
    let (hold, train) = idx.split_at(n_hold);
    let mut hold = hold.to_vec();
    let mut train = train.to_vec();
    hold.sort_unstable();
    train.sort_unstable();
    (
        train.iter().map(|&i| corrs[i].pair()).collect(),
        hold.iter().map(|&i| corrs[i].pair()).collect(),
    )
}

fn score_holdout(stats: &mut RegionStats, hold: &[PointPair<f64>], h: &Homography<f64>, threshold: f64) {
    let inliers: Vec<PointPair<f64>> = hold
        .iter()
        .filter(|p| {
            h.apply(p.src)
                .map(|q| residual(q, p.dst, ResidualSpace::PolarAsCartesian) <= threshold)
                .unwrap_or(false)
        })
        .copied()
        .collect();
    stats.holdout_inliers = inliers.len();
    stats.holdout_error_m = reprojection_error(&inliers, h, ResidualSpace::PolarAsCartesian).ok();
    stats.holdout_error_px = inverse_reprojection_error(&inliers, h).ok();
}
