//! CLEAR-MOT evaluation of a track log against ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::association::{hungarian, CostMatrix};
use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::simulator::GtFrame;
use crate::tracking::TrackSnapshot;

/// Frames whose timestamps differ by more than this are not the same frame.
const TIME_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricsConfig {
    /// Largest ground distance (m) at which a track can explain an object.
    pub dist_threshold: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self { dist_threshold: 3.0 }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dist_threshold > 0.0 && self.dist_threshold.is_finite()) {
            return Err(Error::InvalidConfig("dist_threshold must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FrameStats {
    pub t: f64,
    pub gt: usize,
    pub hypotheses: usize,
    pub matches: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub idsw: usize,
    pub dist_sum: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CategoryStats {
    pub gt: usize,
    pub matches: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub idsw: usize,
    /// Unmatched hypotheses carrying this category.
    pub fp: usize,
    pub motp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClearReport {
    pub frames: usize,
    pub gt_total: usize,
    pub matches: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub idsw: usize,
    pub fpr: f64,
    pub fnr: f64,
    pub idswr: f64,
    pub mota: f64,
    /// Mean matched distance (m); 0 without matches.
    pub motp: f64,
    /// Matched distance summed and divided by the ground-truth total.
    pub motp_gt: f64,
    pub per_category: BTreeMap<String, CategoryStats>,
    pub per_frame: Vec<FrameStats>,
}

impl ClearReport {
    /// Report from sequence totals. Ratios use `gt_total` (or 1 when empty).
    pub fn from_counts(
        frames: usize,
        gt_total: usize,
        fn_: usize,
        fp: usize,
        idsw: usize,
        matches: usize,
        dist_sum: f64,
    ) -> Self {
        let denom = gt_total.max(1) as f64;
        let fnr = fn_ as f64 / denom;
        let fpr = fp as f64 / denom;
        let idswr = idsw as f64 / denom;
        Self {
            frames,
            gt_total,
            matches,
            fp,
            fn_,
            idsw,
            fpr,
            fnr,
            idswr,
            mota: 1.0 - fnr - fpr - idswr,
            motp: if matches > 0 { dist_sum / matches as f64 } else { 0.0 },
            motp_gt: dist_sum / denom,
            per_category: BTreeMap::new(),
            per_frame: Vec::new(),
        }
    }
}

/// CLEAR-MOT over aligned ground-truth and hypothesis frames.
///
/// Pairings from the previous frame survive while still within the threshold;
/// the remaining objects and tracks are matched by minimum total distance. An
/// object matched to a track other than the last one it was matched to counts
/// as an identity switch.
pub fn clear_mot(gt: &[GtFrame], tracks: &[TrackSnapshot], cfg: &MetricsConfig) -> Result<ClearReport> {
    cfg.validate()?;
    if gt.len() != tracks.len() {
        return Err(Error::FrameMismatch(format!(
            "{} ground-truth frames but {} track frames",
            gt.len(),
            tracks.len()
        )));
    }
    let threshold = cfg.dist_threshold;
    let mut previous: BTreeMap<u64, u64> = BTreeMap::new();
    let mut last_id: BTreeMap<u64, u64> = BTreeMap::new();
    let mut per_frame = Vec::with_capacity(gt.len());
    let mut per_category: BTreeMap<String, (CategoryStats, f64)> = BTreeMap::new();
    let (mut gt_total, mut matches, mut fp, mut fn_, mut idsw, mut dist_sum) = (0, 0, 0, 0, 0, 0.0);

    for (k, (g, h)) in gt.iter().zip(tracks).enumerate() {
        if (g.t - h.t).abs() > TIME_TOLERANCE {
            return Err(Error::FrameMismatch(format!(
                "frame {k}: ground truth at t={} but tracks at t={}",
                g.t, h.t
            )));
        }
        let dist = |i: usize, j: usize| g.objects[i].position().distance(&hyp_position(h, j));
        let mut gt_match: Vec<Option<usize>> = vec![None; g.objects.len()];
        let mut hyp_used = vec![false; h.tracks.len()];

        for (i, obj) in g.objects.iter().enumerate() {
            let Some(&prev_id) = previous.get(&obj.id) else { continue };
            if let Some(j) = h.tracks.iter().position(|tr| tr.id == prev_id) {
                if !hyp_used[j] && dist(i, j) <= threshold {
                    gt_match[i] = Some(j);
                    hyp_used[j] = true;
                }
            }
        }

        let free_gt: Vec<usize> = (0..g.objects.len()).filter(|&i| gt_match[i].is_none()).collect();
        let free_hyp: Vec<usize> = (0..h.tracks.len()).filter(|&j| !hyp_used[j]).collect();
        let costs = CostMatrix::from_fn(free_gt.len(), free_hyp.len(), |a, b| {
            let d = dist(free_gt[a], free_hyp[b]);
            (d.is_finite() && d <= threshold).then_some(d)
        })?;
        for (a, b) in hungarian(&costs) {
            gt_match[free_gt[a]] = Some(free_hyp[b]);
            hyp_used[free_hyp[b]] = true;
        }

        let mut stats = FrameStats {
            t: g.t,
            gt: g.objects.len(),
            hypotheses: h.tracks.len(),
            ..Default::default()
        };
        previous.clear();
        for (i, obj) in g.objects.iter().enumerate() {
            let cat = &mut per_category.entry(obj.category.clone()).or_default();
            cat.0.gt += 1;
            match gt_match[i] {
                Some(j) => {
                    let id = h.tracks[j].id;
                    let d = dist(i, j);
                    if last_id.get(&obj.id).is_some_and(|&l| l != id) {
                        stats.idsw += 1;
                        cat.0.idsw += 1;
                    }
                    last_id.insert(obj.id, id);
                    previous.insert(obj.id, id);
                    stats.matches += 1;
                    stats.dist_sum += d;
                    cat.0.matches += 1;
                    cat.1 += d;
                }
                None => {
                    stats.fn_ += 1;
                    cat.0.fn_ += 1;
                }
            }
        }
        for (j, used) in hyp_used.iter().enumerate() {
            if !used {
                stats.fp += 1;
                let label = h.tracks[j].category.clone().unwrap_or_else(|| "unknown".into());
                per_category.entry(label).or_default().0.fp += 1;
            }
        }
        gt_total += stats.gt;
        matches += stats.matches;
        fp += stats.fp;
        fn_ += stats.fn_;
        idsw += stats.idsw;
        dist_sum += stats.dist_sum;
        per_frame.push(stats);
    }

    let mut report = ClearReport::from_counts(gt.len(), gt_total, fn_, fp, idsw, matches, dist_sum);
    report.per_frame = per_frame;
    report.per_category = per_category
        .into_iter()
        .map(|(name, (mut s, d))| {
            s.motp = if s.matches > 0 { d / s.matches as f64 } else { 0.0 };
            (name, s)
        })
        .collect();
    Ok(report)
}

fn hyp_position(h: &TrackSnapshot, j: usize) -> Point2<f64> {
    Point2::new(h.tracks[j].x, h.tracks[j].y)
}
