use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{estimate_homography_dlt, residual, Homography, PointPair, ResidualSpace};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Robust-fit settings. The inlier threshold is a ground-plane distance in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RansacConfig<T> {
    pub max_iterations: usize,
    pub inlier_threshold: T,
    pub min_inliers: usize,
    pub seed: u64,
}

impl<T: Real> Default for RansacConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold: T::lit(0.5),
            min_inliers: 8,
            seed: 0,
        }
    }
}

impl<T: Real> RansacConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidConfig("max_iterations must be ≥ 1".into()));
        }
        if !(self.inlier_threshold > T::zero()) {
            return Err(Error::InvalidConfig("inlier_threshold must be > 0".into()));
        }
        if self.min_inliers < 4 {
            return Err(Error::InvalidConfig("min_inliers must be ≥ 4".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit<T> {
    pub homography: Homography<T>,
    pub inliers: Vec<bool>,
}

impl<T> RansacFit<T> {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Image→polar homography robust to outlying correspondences.
///
/// Each iteration fits a minimal four-pair sample and counts the pairs whose
/// projection lands within `inlier_threshold` meters of the target after both
/// are converted to ground coordinates. The largest consensus set (earliest
/// iteration on ties) is refit with all its members.
pub fn estimate_homography_ransac<T: Real>(
    pairs: &[PointPair<T>],
    cfg: &RansacConfig<T>,
) -> Result<RansacFit<T>> {
    cfg.validate()?;
    if pairs.len() < 4 {
        return Err(Error::InsufficientData {
            needed: 4,
            got: pairs.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best: Option<(usize, Vec<bool>)> = None;
    let mut sample = Vec::with_capacity(4);
    for _ in 0..cfg.max_iterations {
        sample.clear();
        sample.extend(
            rand::seq::index::sample(&mut rng, pairs.len(), 4)
                .into_iter()
                .map(|i| pairs[i]),
        );
        let Ok(h) = estimate_homography_dlt(&sample) else {
            continue;
        };
        let mask = consensus(pairs, &h, cfg.inlier_threshold);
        let count = mask.iter().filter(|&&b| b).count();
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            let done = count == pairs.len();
            best = Some((count, mask));
            if done {
                break;
            }
        }
    }

    let Some((count, mask)) = best else {
        return Err(Error::CalibrationFailed(
            "no non-degenerate minimal sample found".into(),
        ));
    };
    if count < cfg.min_inliers {
        return Err(Error::CalibrationFailed(format!(
            "best consensus {count} below min_inliers {}",
            cfg.min_inliers
        )));
    }

    let members: Vec<_> = pairs
        .iter()
        .zip(&mask)
        .filter_map(|(p, &m)| m.then_some(*p))
        .collect();
    let homography = estimate_homography_dlt(&members)?;
    let refit_mask = consensus(pairs, &homography, cfg.inlier_threshold);
    let refit_count = refit_mask.iter().filter(|&&b| b).count();
    // keep the sample mask when the refit loses support
    let inliers = if refit_count >= count { refit_mask } else { mask };
    Ok(RansacFit {
        homography,
        inliers,
    })
}

fn consensus<T: Real>(pairs: &[PointPair<T>], h: &Homography<T>, threshold: T) -> Vec<bool> {
    pairs
        .iter()
        .map(|p| match h.apply(p.src) {
            Ok(q) => residual(q, p.dst, ResidualSpace::PolarAsCartesian) <= threshold,
            Err(_) => false,
        })
        .collect()
}
