//! Deterministic synthetic scene generator: objects on the sea plane move at
//! constant velocity, project through the camera into ground-truth boxes, and
//! a seeded corruption stage turns ground truth into noisy detections.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{intrinsics_from_fov, project_world_point, CameraPose};
use crate::norm::{normalize, NormalizationConfig};
use crate::types::{BBox, Detection, Frame, GroundTruthObject, GtSource, ObjectClass};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub class: ObjectClass,
    /// Initial world position [x right, y forward] in meters on the sea
    /// plane; the camera sits above the origin.
    pub position_m: [f64; 2],
    pub velocity_mps: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub objects: Vec<ObjectSpec>,
    pub camera: CameraPose,
    pub frame_rate_hz: f64,
    pub duration_s: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub bbox_jitter_px: f64,
    /// Std-dev of the relative distance error.
    pub distance_noise_rel: f64,
    pub outlier_prob: f64,
    /// On an outlier, the drawn relative distance error is scaled by this
    /// factor (zero-mean heavy noise rather than a one-sided bias).
    pub outlier_scale: f64,
    pub miss_prob: f64,
    pub confidence_base: f64,
    /// Std-dev of pitch/roll perturbation for triangulation-input
    /// corruption.
    pub pitch_roll_noise_rad: f64,
}

impl NoiseConfig {
    pub fn zero() -> Self {
        NoiseConfig {
            bbox_jitter_px: 0.0,
            distance_noise_rel: 0.0,
            outlier_prob: 0.0,
            outlier_scale: 1.5,
            miss_prob: 0.0,
            confidence_base: 0.9,
            pitch_roll_noise_rad: 0.0,
        }
    }

    pub fn validated(self) -> Result<Self, SimError> {
        let probs_ok = [self.outlier_prob, self.miss_prob, self.confidence_base]
            .iter()
            .all(|p| (0.0..=1.0).contains(p));
        let stds_ok = [self.bbox_jitter_px, self.distance_noise_rel, self.pitch_roll_noise_rad]
            .iter()
            .all(|s| s.is_finite() && *s >= 0.0);
        if !probs_ok || !stds_ok || !(self.outlier_scale > 1.0) {
            return Err(SimError::InvalidConfig("bad noise config field".to_string()));
        }
        Ok(self)
    }
}

/// Physical object extents (width, height) in meters driving the projected
/// box size. Typical magnitudes; configurable scenes are out of scope.
pub fn class_size_m(class: &ObjectClass) -> (f64, f64) {
    match class {
        ObjectClass::Boat => (8.0, 3.0),
        ObjectClass::Buoy => (1.5, 1.5),
        ObjectClass::Other(_) => (2.0, 2.0),
    }
}

/// Ground-truth box for an object whose base center sits at world (x, y, 0).
/// The bottom-center pixel of the box is exactly the projection of the base
/// point, so triangulating it with the true pose recovers the true range.
pub fn project_object(
    camera: &CameraPose,
    class: &ObjectClass,
    x: f64,
    y: f64,
) -> Option<(BBox, f64)> {
    let (obj_w, obj_h) = class_size_m(class);
    let (u_base, v_base) = project_world_point(camera, x, y, 0.0)?;
    let (_, v_top) = project_world_point(camera, x, y, obj_h)?;
    let range = x.hypot(y);
    if range <= 0.0 || v_top >= v_base {
        return None;
    }
    let half_w = intrinsics_from_fov(camera) * obj_w / range / 2.0;
    let bbox = BBox::new(u_base - half_w, v_top, u_base + half_w, v_base).ok()?;
    let inside = bbox.x1() >= 0.0
        && bbox.y1() >= 0.0
        && bbox.x2() <= camera.image_w as f64
        && bbox.y2() <= camera.image_h as f64;
    inside.then_some((bbox, range))
}

/// Advance objects by constant velocity and project them per frame;
/// ground truth only, detections empty. Deterministic.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<Vec<Frame>, SimError> {
    if !(cfg.duration_s > 0.0) || !(cfg.frame_rate_hz > 0.0) {
        return Err(SimError::InvalidConfig("duration and frame rate must be > 0".to_string()));
    }
    let camera = cfg
        .camera
        .validated()
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    if cfg.objects.is_empty() {
        return Err(SimError::InvalidConfig("no objects".to_string()));
    }
    for (i, obj) in cfg.objects.iter().enumerate() {
        if project_object(&camera, &obj.class, obj.position_m[0], obj.position_m[1]).is_none() {
            return Err(SimError::InvalidConfig(format!(
                "object {i} not visible (below horizon, within FoV) at spawn"
            )));
        }
    }

    let n_frames = (cfg.duration_s * cfg.frame_rate_hz).round().max(1.0) as u64;
    let dt = 1.0 / cfg.frame_rate_hz;
    let mut frames = Vec::with_capacity(n_frames as usize);
    for k in 0..n_frames {
        let t = k as f64 * dt;
        let mut ground_truth = Vec::new();
        for obj in &cfg.objects {
            let x = obj.position_m[0] + obj.velocity_mps[0] * t;
            let y = obj.position_m[1] + obj.velocity_mps[1] * t;
            if let Some((bbox, range)) = project_object(&camera, &obj.class, x, y) {
                ground_truth.push(
                    GroundTruthObject::new(bbox, obj.class.clone(), range, GtSource::Chart)
                        .expect("projected range is finite and non-negative"),
                );
            }
        }
        frames.push(Frame { frame_id: k, timestamp_s: t, detections: Vec::new(), ground_truth });
    }
    Ok(frames)
}

/// Corrupt ground truth into detections: independent misses, Gaussian box
/// jitter, relative distance noise (scaled up on outlier draws), confidence
/// spread around the base. Deterministic per seed. Detections carry both the
/// metric distance and its normalized form under `norm`.
pub fn corrupt_detections(
    gt_frames: &[Frame],
    noise: &NoiseConfig,
    norm: &NormalizationConfig,
    seed: u64,
) -> Result<Vec<Frame>, SimError> {
    let noise = noise.validated()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit_normal = Normal::new(0.0, 1.0).expect("valid std");

    let mut out = Vec::with_capacity(gt_frames.len());
    for frame in gt_frames {
        let mut detections = Vec::new();
        for gt in &frame.ground_truth {
            if rng.gen::<f64>() < noise.miss_prob {
                continue;
            }
            let bbox = jitter_box(&gt.bbox, noise.bbox_jitter_px, &unit_normal, &mut rng);

            let mut rel_err = unit_normal.sample(&mut rng) * noise.distance_noise_rel;
            if rng.gen::<f64>() < noise.outlier_prob {
                rel_err *= noise.outlier_scale;
            }
            let d_hat = (gt.distance_m() * (1.0 + rel_err)).max(0.0);

            let conf_spread = 0.2 * noise.distance_noise_rel;
            let confidence = (noise.confidence_base + unit_normal.sample(&mut rng) * conf_spread)
                .clamp(0.01, 1.0);

            let distance_raw = normalize(d_hat.min(norm.d_max), norm)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            detections.push(
                Detection::new(bbox, gt.class.clone(), confidence, distance_raw, Some(d_hat))
                    .expect("corrupted detection fields are in range"),
            );
        }
        out.push(Frame {
            frame_id: frame.frame_id,
            timestamp_s: frame.timestamp_s,
            detections,
            ground_truth: frame.ground_truth.clone(),
        });
    }
    Ok(out)
}

fn jitter_box(bbox: &BBox, std_px: f64, normal: &Normal<f64>, rng: &mut ChaCha8Rng) -> BBox {
    if std_px == 0.0 {
        return *bbox;
    }
    let mut j = || normal.sample(rng) * std_px;
    let (mut x1, mut x2) = (bbox.x1() + j(), bbox.x2() + j());
    let (mut y1, mut y2) = (bbox.y1() + j(), bbox.y2() + j());
    if x1 > x2 {
        std::mem::swap(&mut x1, &mut x2);
    }
    if y1 > y2 {
        std::mem::swap(&mut y1, &mut y2);
    }
    // jitter can collapse a thin box; keep a minimal extent
    BBox::new(x1, y1, x2.max(x1 + 0.1), y2.max(y1 + 0.1)).expect("jittered box is valid")
}
