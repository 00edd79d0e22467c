//! Cross-module invariants checked on random and simulated inputs.

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcfusion::association::{match_radar_camera, FusionMatchConfig, MatchStage};
use rcfusion::calibration::{calibrate, CalibrationConfig};
use rcfusion::detection::{
    BoundingBox, CameraDetection, Embedding, LogisticSimilarity, RadarDetection, SimilarityProvider,
    EMBEDDING_DIM,
};
use rcfusion::geometry::{
    cartesian_to_polar, estimate_homography_dlt, estimate_homography_ransac, polar_to_cartesian,
    reprojection_error, Homography, Point2, PointPair, RansacConfig, ResidualSpace,
};
use rcfusion::io::{read_frames, write_frames};
use rcfusion::metrics::{clear_mot, MetricsConfig};
use rcfusion::simulator::{synthesize_scene, Scenario, SensorNoiseModel};
use rcfusion::tracking::{
    camera_ground_positions, fuse_detections, track_sequence, Branch, FusionTracker, Source, TrackerConfig,
};

fn random_homography(rng: &mut impl Rng) -> Homography<f64> {
    Homography::new([
        rng.random_range(0.5..2.0),
        rng.random_range(-0.3..0.3),
        rng.random_range(-50.0..50.0),
        rng.random_range(-0.3..0.3),
        rng.random_range(0.5..2.0),
        rng.random_range(-50.0..50.0),
        rng.random_range(-1e-3..1e-3),
        rng.random_range(-1e-3..1e-3),
        1.0,
    ])
    .unwrap()
}

fn random_points(rng: &mut impl Rng, n: usize) -> Vec<Point2<f64>> {
    (0..n)
        .map(|_| Point2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0)))
        .collect()
}

fn unit_embedding(rng: &mut impl Rng) -> Embedding {
    let v: Vec<f64> = (0..EMBEDDING_DIM).map(|_| rng.random_range(-1.0..1.0)).collect();
    Embedding::new(v).unwrap()
}

proptest! {
    #[test]
    fn homography_inverse_round_trip(seed in any::<u64>(), x in 0.0f64..100.0, y in 0.0f64..100.0) {
        let h = random_homography(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = Point2::new(x, y);
        let back = h.inverse().unwrap().apply(h.apply(p).unwrap()).unwrap();
        prop_assert!(back.distance(&p) < 1e-9, "{p:?} -> {back:?}");
    }

    #[test]
    fn ransac_is_deterministic(seed in any::<u64>(), data_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
        let h = Homography::new([0.0, 0.02, 0.0, 0.001, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let pairs: Vec<PointPair<f64>> = (0..40)
            .map(|k| {
                let src = Point2::new(rng.random_range(0.0..1280.0), rng.random_range(200.0..720.0));
                let dst = if k % 4 == 0 {
                    Point2::new(rng.random_range(1.0..30.0), rng.random_range(-0.8..0.8))
                } else {
                    h.apply(src).unwrap()
                };
                PointPair::new(src, dst)
            })
            .collect();
        let cfg = RansacConfig { seed, max_iterations: 100, ..RansacConfig::default() };
        let a = estimate_homography_ransac(&pairs, &cfg).unwrap();
        let b = estimate_homography_ransac(&pairs, &cfg).unwrap();
        prop_assert_eq!(&a.inliers, &b.inliers);
        let bits = |f: &[f64; 9]| f.map(f64::to_bits);
        prop_assert_eq!(bits(a.homography.as_array()), bits(b.homography.as_array()));
    }

    #[test]
    fn reprojection_error_ignores_order(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_homography(&mut rng);
        let mut pairs: Vec<PointPair<f64>> = random_points(&mut rng, 30)
            .into_iter()
            .map(|p| PointPair::new(p, Point2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0))))
            .collect();
        let before = reprojection_error(&pairs, &h, ResidualSpace::Planar).unwrap();
        pairs.shuffle(&mut rng);
        let after = reprojection_error(&pairs, &h, ResidualSpace::Planar).unwrap();
        prop_assert!((before - after).abs() <= 1e-12 * before.max(1.0));
    }

    #[test]
    fn radar_camera_matching_invariants(seed in any::<u64>(), nr in 0usize..7, nc in 0usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let latents: Vec<Embedding> = (0..4).map(|_| unit_embedding(&mut rng)).collect();
        let radar: Vec<RadarDetection> = (0..nr)
            .map(|_| {
                let polar = Point2::polar(rng.random_range(2.0..20.0), rng.random_range(-0.6..0.6));
                let b = BoundingBox::new(polar.theta() - 0.01, polar.r() - 0.5, polar.theta() + 0.01, polar.r() + 0.5).unwrap();
                let emb = rng.random_bool(0.8).then(|| latents[rng.random_range(0..4)].clone());
                RadarDetection::new(polar, b, None, emb).unwrap()
            })
            .collect();
        let camera: Vec<(CameraDetection, Point2<f64>)> = (0..nc)
            .map(|_| {
                let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
                let emb = rng.random_bool(0.8).then(|| latents[rng.random_range(0..4)].clone());
                let ground = Point2::new(rng.random_range(-8.0..8.0), rng.random_range(2.0..20.0));
                (CameraDetection::new(b, "car", 0.9, emb).unwrap(), ground)
            })
            .collect();
        let camera_ground: Vec<(&CameraDetection, Point2<f64>)> = camera.iter().map(|(d, p)| (d, *p)).collect();
        let provider = LogisticSimilarity::default();
        let cfg = FusionMatchConfig::default();
        let m = match_radar_camera(&radar, &camera_ground, &provider, &cfg);

        let mut radar_seen: Vec<usize> = m.unmatched_radar.clone();
        let mut camera_seen: Vec<usize> = m.unmatched_camera.clone();
        for pair in &m.matched {
            let d = polar_to_cartesian(radar[pair.radar].position).unwrap().distance(&camera_ground[pair.camera].1);
            prop_assert!(d <= 3.0);
            if pair.stage == MatchStage::Feature {
                let s = provider.score(radar[pair.radar].embedding.as_ref(), camera_ground[pair.camera].0.embedding.as_ref());
                prop_assert!(s > 0.8);
            }
            radar_seen.push(pair.radar);
            camera_seen.push(pair.camera);
        }
        radar_seen.sort_unstable();
        camera_seen.sort_unstable();
        prop_assert_eq!(radar_seen, (0..nr).collect::<Vec<_>>());
        prop_assert_eq!(camera_seen, (0..nc).collect::<Vec<_>>());

        for det in fuse_detections(&m, &radar, &camera_ground) {
            if det.source == Source::Fused {
                let r = polar_to_cartesian(radar[det.radar_index.unwrap()].position).unwrap();
                prop_assert_eq!(det.position.x().to_bits(), r.x().to_bits());
                prop_assert_eq!(det.position.y().to_bits(), r.y().to_bits());
                prop_assert!(det.camera_index.is_some());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn frame_log_round_trip(seed in any::<u64>(), objects in 0usize..5) {
        let scenario = Scenario::random_traffic(objects, 2.0, seed);
        let noise = SensorNoiseModel {
            radar_false_positive_rate: 0.5,
            camera_false_positive_rate: 0.5,
            ..SensorNoiseModel::default()
        };
        let (frames, _) = synthesize_scene(&scenario, &noise, &[], seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frames.jsonl");
        write_frames(&frames, &path).unwrap();
        prop_assert_eq!(read_frames(&path).unwrap(), frames);
    }
}

#[test]
fn scaled_homographies_apply_identically() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let base = random_homography(&mut rng);
    let pts = random_points(&mut rng, 50);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let s = rng.random_range(1e-3..1e3) * if rng.random_bool(0.5) { -1.0 } else { 1.0 };
        let scaled = Homography::new(base.as_array().map(|v| v * s)).unwrap();
        for &p in &pts {
            worst = worst.max(base.apply(p).unwrap().distance(&scaled.apply(p).unwrap()));
        }
    }
    assert!(worst < 1e-12, "max deviation {worst:e}");
}

#[test]
fn dlt_recovers_exact_homographies() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let h = random_homography(&mut rng);
        let n = rng.random_range(4..12);
        let pairs: Vec<PointPair<f64>> = random_points(&mut rng, n)
            .into_iter()
            .map(|p| PointPair::new(p, h.apply(p).unwrap()))
            .collect();
        worst = worst.max(estimate_homography_dlt(&pairs).unwrap().distance(&h));
    }
    assert!(worst < 1e-6, "worst recovery distance {worst:e}");
}

#[test]
fn calibration_is_bit_deterministic() {
    let (frames, _) = synthesize_scene(&Scenario::random_traffic(6, 15.0, 4), &SensorNoiseModel::default(), &[], 4).unwrap();
    let provider = LogisticSimilarity::default();
    let a = calibrate(&frames, &provider, &CalibrationConfig::default()).unwrap();
    let b = calibrate(&frames, &provider, &CalibrationConfig::default()).unwrap();
    for (x, y) in [(a.h_upper, b.h_upper), (a.h_lower, b.h_lower)] {
        assert_eq!(x.as_array().map(f64::to_bits), y.as_array().map(f64::to_bits));
    }
    assert_eq!(a, b);
}

#[test]
fn noiseless_radar_reports_true_polar_positions() {
    let scenario = Scenario::random_traffic(6, 5.0, 8);
    let (frames, truth) = synthesize_scene(&scenario, &SensorNoiseModel::noiseless(), &[], 8).unwrap();
    for (frame, gt) in frames.iter().zip(&truth.frames) {
        assert_eq!(frame.radar.len(), gt.objects.len());
        for obj in &gt.objects {
            let polar = cartesian_to_polar(obj.position()).unwrap();
            assert!(frame.radar.iter().any(|d| d.position == polar), "t={} id={}", frame.t, obj.id);
        }
    }
}

#[test]
fn simulation_is_bit_deterministic() {
    let scenario = Scenario::random_traffic(5, 5.0, 3);
    let noise = SensorNoiseModel {
        radar_dropout: 0.2,
        radar_false_positive_rate: 0.3,
        ..SensorNoiseModel::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut logs = Vec::new();
    for name in ["a.jsonl", "b.jsonl"] {
        let (frames, _) = synthesize_scene(&scenario, &noise, &[], 3).unwrap();
        let path = dir.path().join(name);
        write_frames(&frames, &path).unwrap();
        logs.push(std::fs::read(path).unwrap());
    }
    assert_eq!(logs[0], logs[1]);
}

#[test]
fn track_ids_increase_and_never_return() {
    let noise = SensorNoiseModel {
        radar_dropout: 0.3,
        camera_dropout: 0.3,
        radar_false_positive_rate: 0.5,
        ..SensorNoiseModel::default()
    };
    let (frames, _) = synthesize_scene(&Scenario::random_traffic(8, 30.0, 5), &noise, &[], 5).unwrap();
    let provider = LogisticSimilarity::default();
    let calib = calibrate(&frames, &provider, &CalibrationConfig::default()).unwrap();
    for branch in Branch::ALL {
        let mut alive: BTreeSet<u64> = BTreeSet::new();
        let mut gone: BTreeSet<u64> = BTreeSet::new();
        let mut max_id = 0;
        let mut tracker = FusionTracker::new(TrackerConfig::default(), Box::new(provider), &[branch]).unwrap();
        for frame in &frames {
            tracker.step(frame, &calib);
            let ids: Vec<u64> = tracker.tracker(branch).unwrap().tracks().iter().map(|t| t.id).collect();
            assert!(ids.windows(2).all(|w| w[0] < w[1]), "ids out of order: {ids:?}");
            let now: BTreeSet<u64> = ids.iter().copied().collect();
            for id in &now {
                assert!(!gone.contains(id), "{branch:?} reused id {id}");
                if !alive.contains(id) {
                    assert!(*id > max_id, "{branch:?} new id {id} not above {max_id}");
                    max_id = *id;
                }
            }
            gone.extend(alive.difference(&now));
            alive = now;
        }
        assert!(max_id > 0);
    }
}

#[test]
fn fused_positions_come_from_radar() {
    let (frames, _) = synthesize_scene(&Scenario::random_traffic(6, 10.0, 6), &SensorNoiseModel::default(), &[], 6).unwrap();
    let provider = LogisticSimilarity::default();
    let calib = calibrate(&frames, &provider, &CalibrationConfig::default()).unwrap();
    let mut fused = 0;
    for frame in &frames {
        let projected = camera_ground_positions(&frame.camera, &calib);
        let camera_ground: Vec<(&CameraDetection, Point2<f64>)> = projected.iter().map(|&(_, d, p)| (d, p)).collect();
        let m = match_radar_camera(&frame.radar, &camera_ground, &provider, &FusionMatchConfig::default());
        for det in fuse_detections(&m, &frame.radar, &camera_ground) {
            if det.source == Source::Fused {
                let r = polar_to_cartesian(frame.radar[det.radar_index.unwrap()].position).unwrap();
                assert_eq!((det.position.x().to_bits(), det.position.y().to_bits()), (r.x().to_bits(), r.y().to_bits()));
                fused += 1;
            }
        }
    }
    assert!(fused > 100, "only {fused} fused detections");
}

#[test]
fn clear_mot_identities_on_simulated_runs() {
    let provider = LogisticSimilarity::default();
    let cfg = MetricsConfig::default();
    for seed in 0..3 {
        let noise = SensorNoiseModel {
            radar_dropout: 0.2,
            camera_false_positive_rate: 0.3,
            ..SensorNoiseModel::default()
        };
        let (frames, truth) = synthesize_scene(&Scenario::random_traffic(6, 20.0, seed), &noise, &[], seed).unwrap();
        let calib = calibrate(&frames, &provider, &CalibrationConfig::default()).unwrap();
        let runs = track_sequence(&frames, &calib, TrackerConfig::default(), Box::new(provider), &Branch::ALL).unwrap();
        for (branch, snaps) in runs {
            let r = clear_mot(&truth.frames, &snaps, &cfg).unwrap();
            assert_eq!(r.mota, 1.0 - r.fnr - r.fpr - r.idswr, "{branch:?}");
            assert!(r.motp >= 0.0 && r.motp <= cfg.dist_threshold, "{branch:?} motp {}", r.motp);
            for f in &r.per_frame {
                assert!(f.dist_sum <= cfg.dist_threshold * f.matches as f64);
            }
        }
    }
}
