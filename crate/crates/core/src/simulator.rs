//! Synthetic scenes: objects moving on the ground plane, seen by a pinhole
//! camera and a range-azimuth radar at the origin.
//!
//! Every random draw comes from a ChaCha stream keyed by frame and sensor, so
//! switching a sensor off (failure windows, dropouts) leaves the noise seen by
//! the other sensor unchanged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Poisson, StandardNormal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::detection::{BoundingBox, CameraDetection, Embedding, FramePair, RadarDetection, EMBEDDING_DIM};
use crate::error::{Error, Result};
use crate::geometry::{cartesian_to_polar, Homography, Point2, PointPair};

type Mat3 = [[f64; 3]; 3];

/// Pinhole camera. World frame: ground plane `z = 0`, `y` along the radar
/// boresight, `x` to the right, `z` up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub skew: f64,
    /// World→camera rotation.
    pub rotation: Mat3,
    /// World→camera translation, `t = −R·C`.
    pub translation: [f64; 3],
    pub image_width: u32,
    pub image_height: u32,
}

/// Camera placement as written in scenario files. Angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSetup {
    pub fx: f64,
    pub fy: f64,
    pub u0: f64,
    pub v0: f64,
    pub skew: f64,
    pub image_width: u32,
    pub image_height: u32,
    /// Optical center `(x, y, z)` in meters.
    pub position: [f64; 3],
    /// Downward tilt of the optical axis below the horizon.
    pub pitch: f64,
    /// Heading of the optical axis, positive towards `+x`.
    pub yaw: f64,
}

impl Default for CameraSetup {
    fn default() -> Self {
        Self {
            fx: 700.0,
            fy: 700.0,
            u0: 640.0,
            v0: 360.0,
            skew: 0.0,
            image_width: 1280,
            image_height: 720,
            position: [0.0, 0.0, 5.0],
            pitch: 0.2,
            yaw: 0.0,
        }
    }
}

impl CameraModel {
    pub fn new(
        intrinsics: [f64; 5],
        rotation: Mat3,
        translation: [f64; 3],
        image_width: u32,
        image_height: u32,
    ) -> Result<Self> {
        let [fx, fy, u0, v0, skew] = intrinsics;
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::InvalidConfig("focal lengths must be positive".into()));
        }
        if image_width == 0 || image_height == 0 {
            return Err(Error::InvalidConfig("image dimensions must be positive".into()));
        }
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| rotation[k][i] * rotation[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-9 {
                    return Err(Error::InvalidConfig("rotation is not orthonormal".into()));
                }
            }
        }
        Ok(Self {
            fx,
            fy,
            u0,
            v0,
            skew,
            rotation,
            translation,
            image_width,
            image_height,
        })
    }

    pub fn from_setup(s: &CameraSetup) -> Result<Self> {
        let (sp, cp) = s.pitch.sin_cos();
        let (sy, cy) = s.yaw.sin_cos();
        // rows: image right, image down, optical axis
        let rotation = [
            [cy, -sy, 0.0],
            [-sp * sy, -sp * cy, -cp],
            [cp * sy, cp * cy, -sp],
        ];
        let c = s.position;
        let mut translation = [0.0; 3];
        for (i, t) in translation.iter_mut().enumerate() {
            *t = -(0..3).map(|k| rotation[i][k] * c[k]).sum::<f64>();
        }
        Self::new([s.fx, s.fy, s.u0, s.v0, s.skew], rotation, translation, s.image_width, s.image_height)
    }

    /// Optical center in world coordinates, `C = −Rᵀ·t`.
    pub fn center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = -(0..3).map(|i| self.rotation[i][k] * self.translation[i]).sum::<f64>();
        }
        c
    }

    /// Projects a world point; fails when it is not in front of the camera.
    pub fn project(&self, p: [f64; 3]) -> Result<Point2<f64>> {
        let r = &self.rotation;
        let cam: Vec<f64> = (0..3)
            .map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + self.translation[i])
            .collect();
        let depth = cam[2];
        if !(depth > 1e-9) {
            return Err(Error::BehindCamera(depth));
        }
        let (x, y) = (cam[0] / depth, cam[1] / depth);
        Ok(Point2::new(self.fx * x + self.skew * y + self.u0, self.fy * y + self.v0))
    }

    pub fn in_image(&self, p: Point2<f64>) -> bool {
        (0.0..=f64::from(self.image_width)).contains(&p.u())
            && (0.0..=f64::from(self.image_height)).contains(&p.v())
    }
}

/// Pixel at which the ground point `(x, y, 0)` appears.
pub fn ground_truth_projection(cam: &CameraModel, ground: Point2<f64>) -> Result<Point2<f64>> {
    cam.project([ground.x(), ground.y(), 0.0])
}

/// The ground→image homography `K·[r₁ r₂ t]` of the camera.
pub fn ground_to_image_homography(cam: &CameraModel) -> Result<Homography<f64>> {
    let k = [
        [cam.fx, cam.skew, cam.u0],
        [0.0, cam.fy, cam.v0],
        [0.0, 0.0, 1.0],
    ];
    let r = &cam.rotation;
    let cols = [[r[0][0], r[1][0], r[2][0]], [r[0][1], r[1][1], r[2][1]], cam.translation];
    let mut h = [0.0; 9];
    for i in 0..3 {
        for (j, col) in cols.iter().enumerate() {
            h[i * 3 + j] = (0..3).map(|m| k[i][m] * col[m]).sum();
        }
    }
    Homography::new(h)
}

/// Exact image→polar map of the ground plane, for scoring calibrations.
pub fn image_to_polar(cam: &CameraModel, p: Point2<f64>) -> Result<Point2<f64>> {
    let g = ground_to_image_homography(cam)?.inverse()?.apply(p)?;
    cartesian_to_polar(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: u64,
    pub category: String,
    /// Piecewise-linear path; the object exists from the first to the last time.
    pub waypoints: Vec<Waypoint>,
    /// Footprint radius (m).
    pub extent: f64,
    /// Scales radar detectability; the radar dropout probability is divided by it.
    #[serde(default = "one")]
    pub reflectivity: f64,
    /// Height (m) used for the top of the camera box.
    #[serde(default)]
    pub height: Option<f64>,
}

fn one() -> f64 {
    1.0
}

impl ObjectSpec {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.is_empty() {
            return Err(Error::InvalidConfig(format!("object {} has no waypoints", self.id)));
        }
        if self.waypoints.windows(2).any(|w| !(w[0].t <= w[1].t)) {
            return Err(Error::InvalidConfig(format!("object {} waypoints are not time-sorted", self.id)));
        }
        if !(self.extent >= 0.0) || !(self.reflectivity > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "object {} needs extent ≥ 0 and reflectivity > 0",
                self.id
            )));
        }
        Ok(())
    }

    /// Position at `t`, or `None` outside the object's lifetime.
    pub fn position(&self, t: f64) -> Option<Point2<f64>> {
        let first = self.waypoints.first()?;
        let last = self.waypoints.last()?;
        if t < first.t || t > last.t {
            return None;
        }
        let k = self.waypoints.partition_point(|w| w.t <= t);
        if k == self.waypoints.len() {
            return Some(Point2::new(last.x, last.y));
        }
        let (a, b) = (&self.waypoints[k - 1], &self.waypoints[k]);
        let s = if b.t > a.t { (t - a.t) / (b.t - a.t) } else { 0.0 };
        Some(Point2::new(a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)))
    }

    fn height(&self) -> f64 {
        self.height.unwrap_or(match self.category.as_str() {
            "person" => 1.7,
            "car" => 1.5,
            "truck" => 3.0,
            _ => 1.6,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorNoiseModel {
    pub radar_range_std: f64,
    pub radar_azimuth_std: f64,
    pub camera_pixel_std: f64,
    pub radar_dropout: f64,
    pub camera_dropout: f64,
    /// Overrides `radar_dropout` for the listed categories.
    pub radar_dropout_by_category: BTreeMap<String, f64>,
    /// Mean false detections per frame.
    pub radar_false_positive_rate: f64,
    pub camera_false_positive_rate: f64,
    /// Norm of the noise added to an object's latent for each embedding.
    pub embedding_noise_std: f64,
}

impl Default for SensorNoiseModel {
    fn default() -> Self {
        Self {
            radar_range_std: 0.1,
            radar_azimuth_std: 0.005,
            camera_pixel_std: 1.0,
            radar_dropout: 0.0,
            camera_dropout: 0.0,
            radar_dropout_by_category: BTreeMap::new(),
            radar_false_positive_rate: 0.0,
            camera_false_positive_rate: 0.0,
            embedding_noise_std: 0.1,
        }
    }
}

impl SensorNoiseModel {
    pub fn noiseless() -> Self {
        Self {
            radar_range_std: 0.0,
            radar_azimuth_std: 0.0,
            camera_pixel_std: 0.0,
            embedding_noise_std: 0.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            self.radar_range_std,
            self.radar_azimuth_std,
            self.camera_pixel_std,
            self.radar_false_positive_rate,
            self.camera_false_positive_rate,
            self.embedding_noise_std,
        ];
        if non_negative.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidConfig("noise parameters must be finite and ≥ 0".into()));
        }
        let probs = [self.radar_dropout, self.camera_dropout]
            .into_iter()
            .chain(self.radar_dropout_by_category.values().copied());
        for p in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidConfig(format!("dropout probability {p} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensor {
    Radar,
    Camera,
}

/// Interval `[t_start, t_end)` during which a sensor reports nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureWindow {
    pub sensor: Sensor,
    pub t_start: f64,
    pub t_end: f64,
}

impl FailureWindow {
    pub fn contains(&self, sensor: Sensor, t: f64) -> bool {
        self.sensor == sensor && self.t_start <= t && t < self.t_end
    }
}

/// Rectangle of the ground plane objects move in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Area {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Default for Area {
    fn default() -> Self {
        Self {
            x_min: -6.0,
            x_max: 6.0,
            y_min: 5.0,
            y_max: 30.0,
        }
    }
}

impl Area {
    fn sample(&self, rng: &mut ChaCha8Rng) -> Point2<f64> {
        Point2::new(
            rng.random_range(self.x_min..self.x_max),
            rng.random_range(self.y_min..self.y_max),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Scenario {
    pub frame_rate: f64,
    pub duration: f64,
    pub area: Area,
    pub camera: CameraSetup,
    pub objects: Vec<ObjectSpec>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            frame_rate: 10.0,
            duration: 10.0,
            area: Area::default(),
            camera: CameraSetup::default(),
            objects: Vec::new(),
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.frame_rate > 0.0) || !(self.duration >= 0.0) {
            return Err(Error::InvalidConfig("frame_rate must be > 0 and duration ≥ 0".into()));
        }
        if !(self.area.x_min < self.area.x_max && self.area.y_min < self.area.y_max) {
            return Err(Error::InvalidConfig("area bounds are inverted".into()));
        }
        CameraModel::from_setup(&self.camera)?;
        for o in &self.objects {
            o.validate()?;
        }
        Ok(())
    }

    pub fn frame_count(&self) -> usize {
        (self.duration * self.frame_rate).round() as usize
    }

    pub fn frame_time(&self, k: usize) -> f64 {
        k as f64 / self.frame_rate
    }

    /// Objects wandering between random waypoints for the whole duration.
    pub fn random_traffic(n_objects: usize, duration: f64, seed: u64) -> Self {
        let mut base = Self {
            duration,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(u64::MAX - 1);
        for id in 0..n_objects as u64 {
            let car = rng.random_bool(0.5);
            let (category, speed, extent) = if car {
                ("car", rng.random_range(2.0..4.0), 1.0)
            } else {
                ("person", rng.random_range(0.8..1.8), 0.3)
            };
            let mut p = base.area.sample(&mut rng);
            let mut t = 0.0;
            let mut waypoints = vec![Waypoint { t, x: p.x(), y: p.y() }];
            while t <= duration {
                let q = base.area.sample(&mut rng);
                t += p.distance(&q) / speed;
                waypoints.push(Waypoint { t, x: q.x(), y: q.y() });
                p = q;
            }
            base.objects.push(ObjectSpec {
                id: id + 1,
                category: category.into(),
                waypoints,
                extent,
                reflectivity: 1.0,
                height: None,
            });
        }
        base
    }

    /// A person and a car whose paths form an X, each turning back at the
    /// middle so that continuing straight would lead onto the other's path.
    /// They pass within 0.45 m of each other.
    pub fn crossing() -> Self {
        let speed = 1.5;
        let arm = (5.0f64 * 5.0 + 2.5 * 2.5).sqrt();
        let t_mid = 1.0 + arm / speed;
        let t_end = 1.0 + 2.0 * arm / speed;
        // one second of straight approach before the arms
        let path = |side: f64, dy: f64| {
            vec![
                Waypoint { t: 0.0, x: side * (5.0 + speed * 5.0 / arm), y: 11.5 + dy - speed * 2.5 / arm },
                Waypoint { t: 1.0, x: side * 5.0, y: 11.5 + dy },
                Waypoint { t: t_mid, x: 0.0, y: 14.0 + dy },
                Waypoint { t: t_end, x: side * 5.0, y: 16.5 + dy },
            ]
        };
        let person = path(-1.0, 0.0);
        let car = path(1.0, 0.45);
        Self {
            duration: t_end,
            objects: vec![
                ObjectSpec {
                    id: 1,
                    category: "person".into(),
                    waypoints: person,
                    extent: 0.3,
                    reflectivity: 1.0,
                    height: None,
                },
                ObjectSpec {
                    id: 2,
                    category: "car".into(),
                    waypoints: car,
                    extent: 1.0,
                    reflectivity: 1.0,
                    height: None,
                },
            ],
            ..Default::default()
        }
    }

    /// Two objects moving steadily apart from each other.
    pub fn pair(duration: f64) -> Self {
        let line = |x0: f64, y0: f64, vx: f64, vy: f64| {
            vec![
                Waypoint { t: 0.0, x: x0, y: y0 },
                Waypoint { t: duration, x: x0 + vx * duration, y: y0 + vy * duration },
            ]
        };
        Self {
            duration,
            objects: vec![
                ObjectSpec {
                    id: 1,
                    category: "person".into(),
                    waypoints: line(-4.0, 8.0, 0.3, 0.6),
                    extent: 0.3,
                    reflectivity: 1.0,
                    height: None,
                },
                ObjectSpec {
                    id: 2,
                    category: "car".into(),
                    waypoints: line(4.0, 26.0, -0.3, -0.6),
                    extent: 1.0,
                    reflectivity: 1.0,
                    height: None,
                },
            ],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtObject {
    pub id: u64,
    pub category: String,
    pub x: f64,
    pub y: f64,
}

impl GtObject {
    pub fn position(&self) -> Point2<f64> {
        Point2::new(self.x, self.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GtFrame {
    pub t: f64,
    pub objects: Vec<GtObject>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub frames: Vec<GtFrame>,
}

/// Two independent noisy copies of `latent`, each unit-normalized.
///
/// Noise is isotropic Gaussian with per-component standard deviation
/// `noise_std / √128`, so its expected norm is about `noise_std`.
pub fn sample_embeddings(latent: &[f64], noise_std: f64, rng: &mut impl Rng) -> Result<(Embedding, Embedding)> {
    Ok((noisy_copy(latent, noise_std, rng)?, noisy_copy(latent, noise_std, rng)?))
}

fn noisy_copy(latent: &[f64], noise_std: f64, rng: &mut impl Rng) -> Result<Embedding> {
    if latent.len() != EMBEDDING_DIM {
        return Err(Error::invalid(format!("latent has dimension {}", latent.len())));
    }
    let sigma = noise_std / (EMBEDDING_DIM as f64).sqrt();
    let v: Vec<f64> = latent
        .iter()
        .map(|&l| {
            let n: f64 = rng.sample(StandardNormal);
            l + sigma * n
        })
        .collect();
    Embedding::new(unit(v))
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.into_iter().map(|x| x / n).collect()
    } else {
        v
    }
}

/// Unit vector with independent Gaussian components; distinct draws are
/// nearly orthogonal in 128 dimensions.
pub fn random_latent(rng: &mut impl Rng) -> Vec<f64> {
    unit((0..EMBEDDING_DIM).map(|_| rng.sample(StandardNormal)).collect())
}

/// Noiseless (camera anchor, radar polar position) pairs for every object
/// visible to both sensors in every frame.
pub fn oracle_correspondences(scenario: &Scenario) -> Result<Vec<PointPair<f64>>> {
    scenario.validate()?;
    let cam = CameraModel::from_setup(&scenario.camera)?;
    let mut out = Vec::new();
    for k in 0..scenario.frame_count() {
        let t = scenario.frame_time(k);
        for obj in &scenario.objects {
            let Some(p) = obj.position(t) else { continue };
            let (Ok(b), Ok(polar)) = (camera_box(&cam, p, obj.extent, obj.height()), cartesian_to_polar(p)) else {
                continue;
            };
            let anchor = crate::detection::lower_center(&b);
            if cam.in_image(anchor) {
                out.push(PointPair::new(anchor, polar));
            }
        }
    }
    Ok(out)
}

const STREAM_RADAR: u64 = 0;
const STREAM_CAMERA: u64 = 1;
const STREAM_LATENT: u64 = u64::MAX;

/// Renders the scenario into time-aligned detection frames and ground truth.
pub fn synthesize_scene(
    scenario: &Scenario,
    noise: &SensorNoiseModel,
    failures: &[FailureWindow],
    seed: u64,
) -> Result<(Vec<FramePair>, GroundTruth)> {
    scenario.validate()?;
    noise.validate()?;
    if let Some(w) = failures.iter().find(|w| !(w.t_start < w.t_end)) {
        return Err(Error::InvalidConfig(format!(
            "failure window [{}, {}) is empty",
            w.t_start, w.t_end
        )));
    }
    let cam = CameraModel::from_setup(&scenario.camera)?;
    let mut latent_rng = ChaCha8Rng::seed_from_u64(seed);
    latent_rng.set_stream(STREAM_LATENT);
    let latents: Vec<Vec<f64>> = scenario.objects.iter().map(|_| random_latent(&mut latent_rng)).collect();

    let mut frames = Vec::with_capacity(scenario.frame_count());
    let mut truth = GroundTruth::default();
    for k in 0..scenario.frame_count() {
        let t = scenario.frame_time(k);
        let live: Vec<(usize, Point2<f64>)> = scenario
            .objects
            .iter()
            .enumerate()
            .filter_map(|(i, o)| o.position(t).map(|p| (i, p)))
            .collect();
        truth.frames.push(GtFrame {
            t,
            objects: live
                .iter()
                .map(|&(i, p)| GtObject {
                    id: scenario.objects[i].id,
                    category: scenario.objects[i].category.clone(),
                    x: p.x(),
                    y: p.y(),
                })
                .collect(),
        });

        let failed = |s: Sensor| failures.iter().any(|w| w.contains(s, t));
        let stream = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * k as u64 + s);
            rng
        };
        let radar = if failed(Sensor::Radar) {
            Vec::new()
        } else {
            radar_frame(scenario, noise, &latents, &live, &mut stream(STREAM_RADAR))?
        };
        let camera = if failed(Sensor::Camera) {
            Vec::new()
        } else {
            camera_frame(scenario, &cam, noise, &latents, &live, &mut stream(STREAM_CAMERA))?
        };
        frames.push(FramePair { t, radar, camera });
    }
    Ok((frames, truth))
}

fn gauss(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    std * n
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean > 0.0 {
        let n: f64 = rng.sample(Poisson::new(mean).expect("positive mean"));
        n as usize
    } else {
        0
    }
}

fn radar_box(polar: Point2<f64>, extent: f64) -> Result<BoundingBox> {
    let half_az = (extent / polar.r().max(1e-3)).min(0.5);
    BoundingBox::new(
        polar.theta() - half_az,
        polar.r() - extent,
        polar.theta() + half_az,
        polar.r() + extent,
    )
}

fn radar_frame(
    scenario: &Scenario,
    noise: &SensorNoiseModel,
    latents: &[Vec<f64>],
    live: &[(usize, Point2<f64>)],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<RadarDetection>> {
    let mut out = Vec::new();
    for &(i, p) in live {
        let obj = &scenario.objects[i];
        let base = noise
            .radar_dropout_by_category
            .get(&obj.category)
            .copied()
            .unwrap_or(noise.radar_dropout);
        let dropped = rng.random::<f64>() < (base / obj.reflectivity).min(1.0);
        let dr = gauss(rng, noise.radar_range_std);
        let da = gauss(rng, noise.radar_azimuth_std);
        let (radar_emb, _) = sample_embeddings(&latents[i], noise.embedding_noise_std, rng)?;
        if dropped {
            continue;
        }
        let Ok(truth) = cartesian_to_polar(p) else { continue };
        let polar = Point2::polar(truth.r() + dr, truth.theta() + da);
        if polar.r() < 0.0 || polar.theta().abs() >= FRAC_PI_2 {
            continue;
        }
        out.push(RadarDetection::new(polar, radar_box(polar, obj.extent)?, None, Some(radar_emb))?);
    }
    for _ in 0..poisson(rng, noise.radar_false_positive_rate) {
        let Ok(polar) = cartesian_to_polar(scenario.area.sample(rng)) else { continue };
        let emb = Embedding::new(random_latent(rng))?;
        out.push(RadarDetection::new(polar, radar_box(polar, 0.3)?, None, Some(emb))?);
    }
    Ok(out)
}

/// Box around an object standing at `p`: bottom edge at the footprint point
/// nearest the camera, top at the object's height.
fn camera_box(cam: &CameraModel, p: Point2<f64>, extent: f64, height: f64) -> Result<BoundingBox> {
    let c = cam.center();
    let to_cam = Point2::new(c[0] - p.x(), c[1] - p.y());
    let d = to_cam.distance(&Point2::new(0.0, 0.0));
    let dir = if d > 0.0 { Point2::new(to_cam.x() / d, to_cam.y() / d) } else { Point2::new(0.0, -1.0) };
    let near = Point2::new(p.x() + extent * dir.x(), p.y() + extent * dir.y());
    let anchor = ground_truth_projection(cam, near)?;
    let side = Point2::new(-dir.y() * extent, dir.x() * extent);
    let left = cam.project([p.x() - side.x(), p.y() - side.y(), 0.0])?;
    let right = cam.project([p.x() + side.x(), p.y() + side.y(), 0.0])?;
    let top = cam.project([p.x(), p.y(), height])?;
    let half = ((right.u() - left.u()).abs() / 2.0).max(1.0);
    BoundingBox::new(anchor.u() - half, top.v().min(anchor.v()), anchor.u() + half, anchor.v())
}

fn camera_frame(
    scenario: &Scenario,
    cam: &CameraModel,
    noise: &SensorNoiseModel,
    latents: &[Vec<f64>],
    live: &[(usize, Point2<f64>)],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<CameraDetection>> {
    let mut out = Vec::new();
    for &(i, p) in live {
        let obj = &scenario.objects[i];
        let dropped = rng.random::<f64>() < noise.camera_dropout;
        let du = gauss(rng, noise.camera_pixel_std);
        let dv = gauss(rng, noise.camera_pixel_std);
        let confidence = rng.random_range(0.6..1.0);
        let (_, camera_emb) = sample_embeddings(&latents[i], noise.embedding_noise_std, rng)?;
        if dropped {
            continue;
        }
        let Ok(b) = camera_box(cam, p, obj.extent, obj.height()) else { continue };
        let b = BoundingBox::new(b.x1 + du, b.y1 + dv, b.x2 + du, b.y2 + dv)?;
        let det = CameraDetection::new(b, obj.category.clone(), confidence, Some(camera_emb))?;
        if cam.in_image(det.anchor) {
            out.push(det);
        }
    }
    for _ in 0..poisson(rng, noise.camera_false_positive_rate) {
        let p = scenario.area.sample(rng);
        let category = if rng.random_bool(0.5) { "person" } else { "car" };
        let confidence = rng.random_range(0.3..0.9);
        let emb = Embedding::new(random_latent(rng))?;
        let Ok(b) = camera_box(cam, p, 0.3, 1.7) else { continue };
        let det = CameraDetection::new(b, category, confidence, Some(emb))?;
        if cam.in_image(det.anchor) {
            out.push(det);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{LogisticSimilarity, SimilarityProvider};
    use nalgebra::{Matrix3, Vector3};

    fn camera() -> CameraModel {
        CameraModel::from_setup(&CameraSetup::default()).unwrap()
    }

    #[test]
    fn optical_axis_hits_principal_point() {
        let cam = camera();
        let (sp, cp) = CameraSetup::default().pitch.sin_cos();
        // axis meets the ground at distance h / tan(pitch)
        let y = 5.0 * cp / sp;
        let p = ground_truth_projection(&cam, Point2::new(0.0, y)).unwrap();
        assert!((p.u() - 640.0).abs() < 1e-9 && (p.v() - 360.0).abs() < 1e-9);
    }

    #[test]
    fn matches_independent_matrix_evaluation() {
        let setup = CameraSetup {
            fx: 500.0,
            fy: 500.0,
            u0: 320.0,
            v0: 320.0,
            position: [0.0, 0.0, 2.0],
            pitch: 0.3,
            ..Default::default()
        };
        let cam = CameraModel::from_setup(&setup).unwrap();
        let k = Matrix3::new(500.0, 0.0, 320.0, 0.0, 500.0, 320.0, 0.0, 0.0, 1.0);
        let (s, c) = 0.3f64.sin_cos();
        let r = Matrix3::new(1.0, 0.0, 0.0, 0.0, -s, -c, 0.0, c, -s);
        let center = Vector3::new(0.0, 0.0, 2.0);
        let x = k * (r * (Vector3::new(1.0, 6.0, 0.0) - center));
        let p = ground_truth_projection(&cam, Point2::new(1.0, 6.0)).unwrap();
        assert!((p.u() - x[0] / x[2]).abs() < 1e-9);
        assert!((p.v() - x[1] / x[2]).abs() < 1e-9);
        let h = ground_to_image_homography(&cam).unwrap();
        assert!(h.apply(Point2::new(1.0, 6.0)).unwrap().distance(&p) < 1e-9);
    }

    #[test]
    fn zero_depth_is_behind_camera() {
        let cam = camera();
        // the point directly below the camera sits on the plane through the center
        let (sp, cp) = CameraSetup::default().pitch.sin_cos();
        let y = -5.0 * sp / cp;
        assert!(matches!(
            ground_truth_projection(&cam, Point2::new(0.0, y)),
            Err(Error::BehindCamera(_))
        ));
        assert!(matches!(cam.project([0.0, -20.0, 0.0]), Err(Error::BehindCamera(_))));
    }

    #[test]
    fn yaw_keeps_rotation_orthonormal() {
        let setup = CameraSetup {
            yaw: 0.2,
            position: [1.0, -0.5, 4.0],
            ..Default::default()
        };
        let cam = CameraModel::from_setup(&setup).unwrap();
        let c = cam.center();
        for (a, b) in c.iter().zip([1.0, -0.5, 4.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    fn static_object() -> Scenario {
        Scenario {
            duration: 1.0,
            objects: vec![ObjectSpec {
                id: 7,
                category: "car".into(),
                waypoints: vec![Waypoint { t: 0.0, x: 1.0, y: 12.0 }, Waypoint { t: 1000.0, x: 1.0, y: 12.0 }],
                extent: 1.0,
                reflectivity: 1.0,
                height: None,
            }],
            ..Default::default()
        }
    }

    #[test]
    fn noiseless_static_object() {
        let sc = static_object();
        let (frames, gt) = synthesize_scene(&sc, &SensorNoiseModel::noiseless(), &[], 3).unwrap();
        assert_eq!(frames.len(), 10);
        assert_eq!(gt.frames.len(), 10);
        let truth = cartesian_to_polar(Point2::new(1.0, 12.0)).unwrap();
        let cam = camera();
        // footprint edge nearest the camera
        let d = (1.0f64 + 144.0).sqrt();
        let near = Point2::new(1.0 - 1.0 / d, 12.0 - 12.0 / d);
        let anchor = ground_truth_projection(&cam, near).unwrap();
        for f in &frames {
            assert_eq!(f.radar.len(), 1);
            assert_eq!(f.radar[0].position, truth);
            assert_eq!(f.camera.len(), 1);
            assert_eq!(f.camera[0].anchor, frames[0].camera[0].anchor);
            assert!(f.camera[0].anchor.distance(&anchor) < 1e-9);
        }
    }

    #[test]
    fn failure_window_blanks_sensor() {
        let sc = static_object();
        let windows = [FailureWindow {
            sensor: Sensor::Camera,
            t_start: 0.3,
            t_end: 0.65,
        }];
        let (frames, _) = synthesize_scene(&sc, &SensorNoiseModel::default(), &windows, 3).unwrap();
        let (plain, _) = synthesize_scene(&sc, &SensorNoiseModel::default(), &[], 3).unwrap();
        for (k, f) in frames.iter().enumerate() {
            assert_eq!(f.camera.is_empty(), (3..=6).contains(&k), "frame {k}");
            assert_eq!(f.radar, plain[k].radar);
        }
    }

    #[test]
    fn radar_dropout_rate() {
        let sc = Scenario {
            duration: 100.0,
            ..static_object()
        };
        let noise = SensorNoiseModel {
            radar_dropout: 0.2,
            ..Default::default()
        };
        let (frames, _) = synthesize_scene(&sc, &noise, &[], 11).unwrap();
        assert_eq!(frames.len(), 1000);
        let n: usize = frames.iter().map(|f| f.radar.len()).sum();
        assert!((760..=840).contains(&n), "{n}");
    }

    #[test]
    fn deterministic() {
        let sc = Scenario::random_traffic(4, 5.0, 9);
        let noise = SensorNoiseModel {
            radar_false_positive_rate: 0.5,
            camera_false_positive_rate: 0.5,
            radar_dropout: 0.1,
            ..Default::default()
        };
        let a = synthesize_scene(&sc, &noise, &[], 5).unwrap();
        let b = synthesize_scene(&sc, &noise, &[], 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ground_truth_homography_reproduces_correspondences() {
        let sc = Scenario::random_traffic(5, 3.0, 2);
        let noise = SensorNoiseModel::noiseless();
        let cam = camera();
        let (frames, _) = synthesize_scene(&sc, &noise, &[], 4).unwrap();
        let mut checked = 0;
        for f in &frames {
            for c in &f.camera {
                // the anchor is the near edge, so compare with the footprint-edge ground point
                let polar = image_to_polar(&cam, c.anchor).unwrap();
                let g = crate::geometry::polar_to_cartesian(polar).unwrap();
                let back = ground_truth_projection(&cam, g).unwrap();
                assert!(back.distance(&c.anchor) < 1e-6);
                checked += 1;
            }
        }
        assert!(checked > 0);
    }

    #[test]
    fn embedding_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_latent(&mut rng);
        let b = random_latent(&mut rng);
        let sim = LogisticSimilarity::default();
        let (r, c) = sample_embeddings(&a, 0.0, &mut rng).unwrap();
        assert_eq!(r, c);
        assert!((sim.similarity(&r, &c).unwrap() - 0.9933071).abs() < 1e-7);
        let (rb, _) = sample_embeddings(&b, 0.0, &mut rng).unwrap();
        assert!(sim.similarity(&r, &rb).unwrap() < 0.01);

        let trials = 10_000;
        let mut above = 0;
        for _ in 0..trials {
            let (r, c) = sample_embeddings(&a, 0.1, &mut rng).unwrap();
            if sim.similarity(&r, &c).unwrap() > 0.8 {
                above += 1;
            }
        }
        assert!(above * 100 >= trials * 99, "{above}");
    }

    #[test]
    fn crossing_paths_meet_closely() {
        let sc = Scenario::crossing();
        let (a, b) = (&sc.objects[0], &sc.objects[1]);
        let mut closest = f64::INFINITY;
        let mut t = 0.0;
        while t <= sc.duration {
            closest = closest.min(a.position(t).unwrap().distance(&b.position(t).unwrap()));
            t += 0.01;
        }
        assert!(closest < 1.0 && closest > 0.3, "{closest}");
    }
}
