//! SORT-style tracking: Kalman prediction, IoU cost, Hungarian association,
//! age/hit lifecycle, plus a bounded running-average over each track's
//! distance estimates.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hungarian::{self, CostMatrix};
use crate::kalman::{self, KalmanState};
use crate::matching::iou;
use crate::types::{BBox, Detection};

#[derive(Debug, Error, PartialEq)]
pub enum TrackerError {
    #[error("invalid tracker config: {0}")]
    InvalidConfig(String),
    #[error("negative distance estimate {0}")]
    NegativeDistance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    pub iou_gate: f64,
    pub max_age: u32,
    pub min_hits: u32,
    pub smoothing_window: usize,
}

pub const DEFAULT_IOU_GATE: f64 = 0.3;
pub const DEFAULT_MAX_AGE: u32 = 3;
pub const DEFAULT_MIN_HITS: u32 = 3;
pub const DEFAULT_SMOOTHING_WINDOW: usize = 10;

impl TrackerConfig {
    pub fn new(
        iou_gate: f64,
        max_age: u32,
        min_hits: u32,
        smoothing_window: usize,
    ) -> Result<Self, TrackerError> {
        if !(0.0..1.0).contains(&iou_gate) || iou_gate <= 0.0 {
            return Err(TrackerError::InvalidConfig(format!("iou_gate {iou_gate} outside (0, 1)")));
        }
        if max_age < 1 || min_hits < 1 || smoothing_window < 1 {
            return Err(TrackerError::InvalidConfig(
                "max_age, min_hits, smoothing_window must all be >= 1".to_string(),
            ));
        }
        Ok(TrackerConfig { iou_gate, max_age, min_hits, smoothing_window })
    }
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            iou_gate: DEFAULT_IOU_GATE,
            max_age: DEFAULT_MAX_AGE,
            min_hits: DEFAULT_MIN_HITS,
            smoothing_window: DEFAULT_SMOOTHING_WINDOW,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Track {
    pub track_id: u64,
    pub kalman: KalmanState,
    /// Consecutive frames with an associated detection.
    pub hit_streak: u32,
    pub hits: u32,
    /// Frames since the last associated detection.
    pub time_since_update: u32,
    pub confirmed: bool,
    distance_history: VecDeque<f64>,
    smoothed_distance_m: Option<f64>,
    last_distance_m: Option<f64>,
}

impl Track {
    fn new(track_id: u64, bbox: &BBox, min_hits: u32) -> Self {
        Track {
            track_id,
            kalman: kalman::init(bbox),
            hit_streak: 1,
            hits: 1,
            time_since_update: 0,
            confirmed: min_hits <= 1,
            distance_history: VecDeque::new(),
            smoothed_distance_m: None,
            last_distance_m: None,
        }
    }

    pub fn bbox(&self) -> Option<BBox> {
        kalman::state_to_bbox(&self.kalman)
    }

    pub fn smoothed_distance_m(&self) -> Option<f64> {
        self.smoothed_distance_m
    }

    pub fn last_distance_m(&self) -> Option<f64> {
        self.last_distance_m
    }

    /// Push a distance estimate into the bounded window and return the
    /// window mean.
    pub fn smooth_distance(&mut self, new_estimate_m: f64, window: usize) -> Result<f64, TrackerError> {
        if !new_estimate_m.is_finite() || new_estimate_m < 0.0 {
            return Err(TrackerError::NegativeDistance(new_estimate_m));
        }
        self.distance_history.push_back(new_estimate_m);
        while self.distance_history.len() > window {
            self.distance_history.pop_front();
        }
        let mean =
            self.distance_history.iter().sum::<f64>() / self.distance_history.len() as f64;
        // summation rounding must not push the mean outside the window's
        // range; in particular a constant window yields the constant exactly
        let lo = self.distance_history.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = self.distance_history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = mean.clamp(lo, hi);
        self.last_distance_m = Some(new_estimate_m);
        self.smoothed_distance_m = Some(mean);
        Ok(mean)
    }
}

/// Snapshot of one confirmed track after a step.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackView {
    pub track_id: u64,
    pub bbox: Option<BBox>,
    pub last_distance_m: Option<f64>,
    pub smoothed_distance_m: Option<f64>,
    pub time_since_update: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// Confirmed tracks alive after this step.
    pub tracks: Vec<TrackView>,
    /// Detection index -> track id, covering matched and newly spawned
    /// detections.
    pub assignments: Vec<(usize, u64)>,
}

/// One tracker per video sequence; mutate only through sequential `step`
/// calls.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Tracker { config, tracks: Vec::new(), next_id: 1 }
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    /// Advance one frame: predict, associate by IoU via minimum-cost
    /// assignment, update matched tracks (smoothing their distance), spawn
    /// tentative tracks for unmatched detections, drop stale tracks.
    pub fn step(&mut self, detections: &[Detection], dt: u32) -> StepResult {
        let dt = dt.max(1);
        for track in &mut self.tracks {
            for _ in 0..dt {
                track.kalman = kalman::predict(&track.kalman);
            }
            track.time_since_update += dt;
        }

        let predicted: Vec<Option<BBox>> = self.tracks.iter().map(|t| t.bbox()).collect();
        let mut matched_pairs: Vec<(usize, usize)> = Vec::new(); // (track, det)
        if !self.tracks.is_empty() && !detections.is_empty() {
            let cost = CostMatrix::from_fn(self.tracks.len(), detections.len(), |ti, di| {
                match &predicted[ti] {
                    Some(b) => 1.0 - iou(b, &detections[di].bbox),
                    None => 1.0,
                }
            });
            for (ti, di) in hungarian::solve(&cost) {
                let ok = predicted[ti]
                    .as_ref()
                    .map(|b| iou(b, &detections[di].bbox) >= self.config.iou_gate)
                    .unwrap_or(false);
                if ok {
                    matched_pairs.push((ti, di));
                }
            }
        }

        let mut assignments = Vec::new();
        let mut det_matched = vec![false; detections.len()];
        for &(ti, di) in &matched_pairs {
            det_matched[di] = true;
            let track = &mut self.tracks[ti];
            track.kalman = kalman::update(&track.kalman, &detections[di].bbox);
            track.time_since_update = 0;
            track.hit_streak += 1;
            track.hits += 1;
            if track.hit_streak >= self.config.min_hits {
                track.confirmed = true;
            }
            if let Some(d) = detections[di].distance_m() {
                // estimates are validated non-negative at construction
                let _ = track.smooth_distance(d, self.config.smoothing_window);
            }
            assignments.push((di, track.track_id));
        }

        for track in &mut self.tracks {
            if track.time_since_update > 0 {
                track.hit_streak = 0;
            }
        }

        for (di, det) in detections.iter().enumerate() {
            if det_matched[di] {
                continue;
            }
            let mut track = Track::new(self.next_id, &det.bbox, self.config.min_hits);
            self.next_id += 1;
            if let Some(d) = det.distance_m() {
                let _ = track.smooth_distance(d, self.config.smoothing_window);
            }
            assignments.push((di, track.track_id));
            self.tracks.push(track);
        }

        let max_age = self.config.max_age;
        self.tracks.retain(|t| t.time_since_update <= max_age);

        assignments.sort_unstable();
        let tracks = self
            .tracks
            .iter()
            .filter(|t| t.confirmed)
            .map(|t| TrackView {
                track_id: t.track_id,
                bbox: t.bbox(),
                last_distance_m: t.last_distance_m,
                smoothed_distance_m: t.smoothed_distance_m,
                time_since_update: t.time_since_update,
            })
            .collect();
        StepResult { tracks, assignments }
    }
}
