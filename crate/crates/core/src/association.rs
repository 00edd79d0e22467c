//! Assignment between detection sets: the rectangular assignment solver, the
//! two-stage radar/camera matcher and the category gate for detection-track
//! association.

use serde::{Deserialize, Serialize};

use crate::detection::{CameraDetection, RadarDetection, SimilarityProvider};
use crate::error::{Error, Result};
use crate::geometry::{polar_to_cartesian, Point2};
use crate::scalar::Real;
use crate::tracking::{FusedDetection, Track};

/// Rectangular matrix of non-negative costs; `None` marks an infeasible cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix<T> {
    rows: usize,
    cols: usize,
    values: Vec<Option<T>>,
}

impl<T: Real> CostMatrix<T> {
    pub fn new(rows: usize, cols: usize, values: Vec<Option<T>>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::invalid(format!(
                "cost matrix {rows}×{cols} needs {} entries, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(bad) = values.iter().flatten().find(|v| !v.is_finite() || **v < T::zero()) {
            return Err(Error::invalid(format!("invalid cost {bad}")));
        }
        Ok(Self { rows, cols, values })
    }

    /// Fully feasible matrix from nested rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("ragged cost matrix"));
        }
        Self::new(
            rows.len(),
            cols,
            rows.iter().flatten().map(|v| Some(*v)).collect(),
        )
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Option<T>) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self::new(rows, cols, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        self.values[row * self.cols + col]
    }

    /// Sum of the costs of `assignment`, accumulated in the given order.
    pub fn total(&self, assignment: &[(usize, usize)]) -> T {
        assignment
            .iter()
            .fold(T::zero(), |acc, &(r, c)| acc + self.get(r, c).unwrap_or_else(T::nan))
    }
}

/// Minimum-cost assignment over feasible cells.
///
/// Among assignments of maximum cardinality the total cost is minimized; among
/// equal-cost optima the lexicographically smallest sorted `(row, col)` list
/// is returned. Output is sorted by row.
pub fn hungarian<T: Real>(costs: &CostMatrix<T>) -> Vec<(usize, usize)> {
    let mut row_on = vec![true; costs.rows];
    let mut col_on = vec![true; costs.cols];
    let (mut current, best_cost) = shortest_augmenting_paths(costs, &row_on, &col_on);
    let size = current.len();
    if size == 0 {
        return current;
    }
    let tol = T::epsilon() * T::lit(64.0) * (T::one() + best_cost.abs());

    // Fix rows in order, each to the smallest column that still admits an
    // optimum. `current` is always an optimum consistent with the fixed prefix,
    // so only columns left of its choice need probing.
    let mut fixed = Vec::with_capacity(size);
    let mut fixed_cost = T::zero();
    for r in 0..costs.rows {
        if fixed.len() == size {
            break;
        }
        row_on[r] = false;
        let incumbent = current.iter().find(|&&(rr, _)| rr == r).map(|&(_, c)| c);
        let mut chosen = None;
        for c in 0..incumbent.unwrap_or(costs.cols) {
            let Some(cost) = costs.get(r, c).filter(|_| col_on[c]) else {
                continue;
            };
            col_on[c] = false;
            let (rest, rest_cost) = shortest_augmenting_paths(costs, &row_on, &col_on);
            if fixed.len() + 1 + rest.len() == size
                && fixed_cost + cost + rest_cost <= best_cost + tol
            {
                current = fixed.iter().copied().chain([(r, c)]).chain(rest).collect();
                chosen = Some(c);
                break;
            }
            col_on[c] = true;
        }
        if chosen.is_none() {
            if let Some(c) = incumbent {
                col_on[c] = false;
                chosen = Some(c);
            }
        }
        if let Some(c) = chosen {
            fixed.push((r, c));
            fixed_cost = fixed_cost + costs.get(r, c).unwrap();
        }
    }
    fixed
}

/// Successive shortest augmenting paths restricted to the active rows and columns.
///
/// Returns a maximum-cardinality assignment of minimum cost and its cost.
fn shortest_augmenting_paths<T: Real>(
    costs: &CostMatrix<T>,
    row_on: &[bool],
    col_on: &[bool],
) -> (Vec<(usize, usize)>, T) {
    let (rows, cols) = (costs.rows, costs.cols);
    let mut row_match: Vec<Option<usize>> = vec![None; rows];
    let mut col_match: Vec<Option<usize>> = vec![None; cols];
    let mut dist_row = vec![T::infinity(); rows];
    let mut dist_col = vec![T::infinity(); cols];
    let mut pred_col = vec![usize::MAX; cols];

    loop {
        for r in 0..rows {
            dist_row[r] = if row_on[r] && row_match[r].is_none() {
                T::zero()
            } else {
                T::infinity()
            };
        }
        dist_col.fill(T::infinity());
        pred_col.fill(usize::MAX);

        // Bellman-Ford over the residual graph; reverse edges carry negated costs
        for _ in 0..rows + cols + 1 {
            let mut changed = false;
            for r in (0..rows).filter(|&r| row_on[r] && dist_row[r].is_finite()) {
                for c in (0..cols).filter(|&c| col_on[c] && row_match[r] != Some(c)) {
                    if let Some(w) = costs.get(r, c) {
                        let d = dist_row[r] + w;
                        if d < dist_col[c] {
                            dist_col[c] = d;
                            pred_col[c] = r;
                            changed = true;
                        }
                    }
                }
            }
            for c in (0..cols).filter(|&c| dist_col[c].is_finite()) {
                if let Some(r) = col_match[c] {
                    let d = dist_col[c] - costs.get(r, c).unwrap();
                    if d < dist_row[r] {
                        dist_row[r] = d;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }

        let target = (0..cols)
            .filter(|&c| col_on[c] && col_match[c].is_none() && dist_col[c].is_finite())
            .min_by(|&a, &b| dist_col[a].partial_cmp(&dist_col[b]).unwrap().then(a.cmp(&b)));
        let Some(mut c) = target else {
            break;
        };
        loop {
            let r = pred_col[c];
            let previous = row_match[r];
            row_match[r] = Some(c);
            col_match[c] = Some(r);
            match previous {
                Some(pc) => c = pc,
                None => break,
            }
        }
    }

    let assignment: Vec<_> = row_match
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| (r, c)))
        .collect();
    let total = costs.total(&assignment);
    (assignment, total)
}

/// Which matching stage paired a radar and a camera detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchStage {
    Feature,
    Position,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RadarCameraMatch {
    pub radar: usize,
    pub camera: usize,
    pub stage: MatchStage,
}

/// Outcome of radar/camera matching. Indices partition both inputs.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MatchResult {
    pub matched: Vec<RadarCameraMatch>,
    pub unmatched_radar: Vec<usize>,
    pub unmatched_camera: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionMatchConfig {
    /// Feature stage requires similarity strictly above this.
    pub sim_threshold: f64,
    /// Maximum ground distance (m) for any radar/camera pair.
    pub dist_threshold: f64,
}

impl Default for FusionMatchConfig {
    fn default() -> Self {
        Self {
            sim_threshold: 0.8,
            dist_threshold: 3.0,
        }
    }
}

/// Two-stage radar/camera association.
///
/// The feature stage accepts pairs with similarity above the threshold and
/// ground distance within the gate, greedily by descending similarity. The
/// position stage runs the assignment solver on the ground-distance matrix of
/// everything left and reverts any pair farther apart than the gate.
pub fn match_radar_camera(
    radar: &[RadarDetection],
    camera_ground: &[(&CameraDetection, Point2<f64>)],
    provider: &dyn SimilarityProvider,
    cfg: &FusionMatchConfig,
) -> MatchResult {
    let radar_ground: Vec<Point2<f64>> = radar
        .iter()
        .map(|d| polar_to_cartesian(d.position).unwrap_or(Point2::new(f64::NAN, f64::NAN)))
        .collect();
    let dist = |i: usize, j: usize| radar_ground[i].distance(&camera_ground[j].1);

    let mut candidates = Vec::new();
    for (i, r) in radar.iter().enumerate() {
        for (j, (c, _)) in camera_ground.iter().enumerate() {
            let s = provider.score(r.embedding.as_ref(), c.embedding.as_ref());
            if s > cfg.sim_threshold && dist(i, j) <= cfg.dist_threshold {
                candidates.push((s, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut radar_used = vec![false; radar.len()];
    let mut camera_used = vec![false; camera_ground.len()];
    let mut matched = Vec::new();
    for (_, i, j) in candidates {
        if !radar_used[i] && !camera_used[j] {
            radar_used[i] = true;
            camera_used[j] = true;
            matched.push(RadarCameraMatch {
                radar: i,
                camera: j,
                stage: MatchStage::Feature,
            });
        }
    }

    let rest_r: Vec<usize> = (0..radar.len()).filter(|&i| !radar_used[i]).collect();
    let rest_c: Vec<usize> = (0..camera_ground.len()).filter(|&j| !camera_used[j]).collect();
    let costs = CostMatrix::from_fn(rest_r.len(), rest_c.len(), |a, b| {
        let d = dist(rest_r[a], rest_c[b]);
        d.is_finite().then_some(d)
    })
    .expect("distances are finite and non-negative");
    for (a, b) in hungarian(&costs) {
        let (i, j) = (rest_r[a], rest_c[b]);
        if dist(i, j) <= cfg.dist_threshold {
            radar_used[i] = true;
            camera_used[j] = true;
            matched.push(RadarCameraMatch {
                radar: i,
                camera: j,
                stage: MatchStage::Position,
            });
        }
    }

    matched.sort_by_key(|m| (m.radar, m.camera));
    MatchResult {
        matched,
        unmatched_radar: (0..radar.len()).filter(|&i| !radar_used[i]).collect(),
        unmatched_camera: (0..camera_ground.len()).filter(|&j| !camera_used[j]).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryGate {
    Matched,
    Unmatched,
}

/// Category consistency between a detection and a track. An absent label on
/// either side passes.
pub fn gate_by_category(detection: Option<&str>, track: Option<&str>) -> CategoryGate {
    match (detection, track) {
        (Some(d), Some(t)) if d != t => CategoryGate::Unmatched,
        _ => CategoryGate::Matched,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AssociationConfig {
    /// Detections farther than this (m) from a predicted track cannot match it.
    pub gate_distance: f64,
    pub category_gating: bool,
}

impl Default for AssociationConfig {
    fn default() -> Self {
        Self {
            gate_distance: 3.0,
            category_gating: true,
        }
    }
}

/// Detection-to-track assignment.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrackAssignment {
    /// `(detection_index, track_index)`
    pub matched: Vec<(usize, usize)>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_tracks: Vec<usize>,
}

/// Matches detections to tracks whose state holds the prediction for this frame.
pub fn match_detections_to_tracks(
    dets: &[FusedDetection],
    tracks: &[Track],
    cfg: &AssociationConfig,
) -> TrackAssignment {
    let costs = CostMatrix::from_fn(dets.len(), tracks.len(), |i, j| {
        let det = &dets[i];
        let track = &tracks[j];
        if cfg.category_gating
            && gate_by_category(det.category.as_deref(), track.category.as_deref())
                == CategoryGate::Unmatched
        {
            return None;
        }
        let d = det.position.distance(&track.position());
        (d.is_finite() && d <= cfg.gate_distance).then_some(d)
    })
    .expect("gated distances are finite and non-negative");
    let matched = hungarian(&costs);
    let mut det_used = vec![false; dets.len()];
    let mut track_used = vec![false; tracks.len()];
    for &(i, j) in &matched {
        det_used[i] = true;
        track_used[j] = true;
    }
    TrackAssignment {
        matched,
        unmatched_detections: (0..dets.len()).filter(|&i| !det_used[i]).collect(),
        unmatched_tracks: (0..tracks.len()).filter(|&j| !track_used[j]).collect(),
    }
}
