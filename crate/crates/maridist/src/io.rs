//! Sequence file format (JSON lines, versioned header), evaluation and
//! tracking pipelines, and the report document those pipelines emit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{triangulate_distance, CameraPose, GeometryError};
use crate::matching::{match_detections, MatchSet};
use crate::metrics::{
    self, binned_distance_errors, classes_present, coco_thresholds, mean_ap, precision_recall,
    BinnedStats, DistanceErrorSummary,
};
use crate::norm::{denormalize, NormalizationConfig, NormError, DEFAULT_D_MAX};
use crate::tracker::{Tracker, TrackerConfig, TrackerError};
use crate::types::Frame;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("schema version mismatch: file has {found}, expected {expected}")]
    SchemaVersionMismatch { found: u32, expected: u32 },
    #[error("sequence has no ground truth")]
    NoGroundTruth,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Norm(#[from] NormError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceHeader {
    pub schema_version: u32,
    pub sequence_id: String,
    #[serde(default)]
    pub camera_pose: Option<CameraPose>,
    #[serde(default)]
    pub normalization: Option<NormalizationConfig>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub header: SequenceHeader,
    pub frames: Vec<Frame>,
}

impl SequenceFile {
    pub fn new(header: SequenceHeader, frames: Vec<Frame>) -> Result<Self, PipelineError> {
        validate_frame_order(&frames)?;
        Ok(SequenceFile { header, frames })
    }
}

fn validate_frame_order(frames: &[Frame]) -> Result<(), PipelineError> {
    for (i, w) in frames.windows(2).enumerate() {
        if w[1].frame_id <= w[0].frame_id {
            return Err(PipelineError::Parse {
                line: i + 3, // header is line 1, frame i is line i + 2
                reason: format!("frame ids not strictly increasing: {} then {}", w[0].frame_id, w[1].frame_id),
            });
        }
        if w[1].timestamp_s < w[0].timestamp_s {
            return Err(PipelineError::Parse {
                line: i + 3,
                reason: "timestamps must be nondecreasing".to_string(),
            });
        }
    }
    Ok(())
}

/// Parse a sequence from JSON-lines text: header on line 1, one frame per
/// following line.
pub fn parse_sequence(text: &str) -> Result<SequenceFile, PipelineError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines.next().ok_or(PipelineError::Parse {
        line: 1,
        reason: "empty file".to_string(),
    })?;
    let header: SequenceHeader =
        serde_json::from_str(header_line).map_err(|e| PipelineError::Parse {
            line: 1,
            reason: e.to_string(),
        })?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(PipelineError::SchemaVersionMismatch {
            found: header.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    let mut frames = Vec::new();
    for (idx, line) in lines {
        let frame: Frame = serde_json::from_str(line).map_err(|e| PipelineError::Parse {
            line: idx + 1,
            reason: e.to_string(),
        })?;
        frames.push(frame);
    }
    SequenceFile::new(header, frames)
}

pub fn load_sequence(path: &Path) -> Result<SequenceFile, PipelineError> {
    parse_sequence(&std::fs::read_to_string(path)?)
}

pub fn serialize_sequence(seq: &SequenceFile) -> String {
    let mut out = serde_json::to_string(&seq.header).expect("header serializes");
    for frame in &seq.frames {
        out.push('\n');
        out.push_str(&serde_json::to_string(frame).expect("frame serializes"));
    }
    out.push('\n');
    out
}

pub fn save_sequence(seq: &SequenceFile, path: &Path) -> Result<(), PipelineError> {
    std::fs::write(path, serialize_sequence(seq))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    pub outlier_rel_threshold: f64,
    pub class_aware: bool,
    pub bin_edges_m: Vec<f64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            iou_threshold: crate::matching::DEFAULT_IOU_THRESHOLD,
            outlier_rel_threshold: metrics::DEFAULT_OUTLIER_REL_THRESHOLD,
            class_aware: true,
            bin_edges_m: vec![0.0, 100.0, 200.0, 300.0, 400.0, DEFAULT_D_MAX],
        }
    }
}

/// Config echo carried inside every report so each number is traceable to
/// the thresholds that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub iou_threshold: f64,
    pub outlier_rel_threshold: f64,
    pub class_aware: bool,
    pub bin_edges_m: Vec<f64>,
    pub normalization: Option<NormalizationConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub sequence_id: String,
    pub n_frames: usize,
    pub per_class_ap50: BTreeMap<String, f64>,
    pub map50: Option<f64>,
    pub map50_95: Option<f64>,
    pub precision: f64,
    pub recall: f64,
    pub weighted_error_m: Option<f64>,
    pub summary: Option<DistanceErrorSummary>,
    pub binned: Option<BinnedStats>,
    pub config: ConfigEcho,
}

/// Reports as written to disk / stdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReportDoc {
    Eval { report: EvalReport },
    Track { raw: EvalReport, smoothed: EvalReport },
}

/// Fill missing metric distances by inverting the normalization from the
/// sequence header. Detections stay untouched when the header has no
/// normalization config or the distance is already metric.
pub fn denormalize_detections(seq: &SequenceFile) -> Result<SequenceFile, PipelineError> {
    let Some(norm) = seq.header.normalization else {
        return Ok(seq.clone());
    };
    let mut frames = seq.frames.clone();
    for frame in &mut frames {
        for det in &mut frame.detections {
            if det.distance_m().is_none() {
                let d = denormalize(det.distance_raw, &norm)?;
                *det = det.with_distance_m(d).expect("denormalized distance is valid");
            }
        }
    }
    Ok(SequenceFile { header: seq.header.clone(), frames })
}

fn match_all(frames: &[Frame], cfg: &EvalConfig) -> Vec<MatchSet> {
    frames
        .iter()
        .map(|f| match_detections(&f.detections, &f.ground_truth, cfg.iou_threshold, cfg.class_aware))
        .collect()
}

/// Detection and distance metrics over a whole sequence.
pub fn run_eval(seq: &SequenceFile, cfg: &EvalConfig) -> Result<EvalReport, PipelineError> {
    if seq.frames.iter().all(|f| f.ground_truth.is_empty()) {
        return Err(PipelineError::NoGroundTruth);
    }
    let seq = denormalize_detections(seq)?;
    let frames = &seq.frames;

    let classes = classes_present(frames);
    let mut per_class_ap50 = BTreeMap::new();
    for class in &classes {
        if let Ok(Some(ap)) = metrics::average_precision(frames, class, cfg.iou_threshold) {
            per_class_ap50.insert(class.label().to_string(), ap);
        }
    }
    let map50 = mean_ap(frames, &classes, &[cfg.iou_threshold]).ok();
    let map50_95 = mean_ap(frames, &classes, &coco_thresholds()).ok();
    let (precision, recall) = precision_recall(frames, cfg.iou_threshold, cfg.class_aware);

    let matches = match_all(frames, cfg);
    let weighted_error_m = metrics::weighted_distance_error(&matches).ok();
    let summary = metrics::distance_error_summary(&matches, cfg.outlier_rel_threshold).ok();
    let binned = binned_distance_errors(&matches, &cfg.bin_edges_m, cfg.outlier_rel_threshold).ok();

    Ok(EvalReport {
        sequence_id: seq.header.sequence_id.clone(),
        n_frames: frames.len(),
        per_class_ap50,
        map50,
        map50_95,
        precision,
        recall,
        weighted_error_m,
        summary,
        binned,
        config: ConfigEcho {
            iou_threshold: cfg.iou_threshold,
            outlier_rel_threshold: cfg.outlier_rel_threshold,
            class_aware: cfg.class_aware,
            bin_edges_m: cfg.bin_edges_m.clone(),
            normalization: seq.header.normalization,
        },
    })
}

/// Run the tracker over the sequence, replace each tracked detection's
/// distance with its track's running-average value, and report raw vs
/// smoothed side by side.
pub fn run_track(
    seq: &SequenceFile,
    tracker_cfg: &TrackerConfig,
    eval_cfg: &EvalConfig,
) -> Result<(SequenceFile, EvalReport, EvalReport), PipelineError> {
    let seq = denormalize_detections(seq)?;
    let raw_report = run_eval(&seq, eval_cfg)?;

    let mut tracker = Tracker::new(*tracker_cfg);
    let mut frames = seq.frames.clone();
    let mut prev_id: Option<u64> = None;
    for frame in &mut frames {
        let dt = match prev_id {
            Some(p) => (frame.frame_id - p) as u32,
            None => 1,
        };
        prev_id = Some(frame.frame_id);
        let result = tracker.step(&frame.detections, dt);
        let by_track: std::collections::HashMap<u64, f64> = tracker
            .tracks()
            .iter()
            .filter_map(|t| t.smoothed_distance_m().map(|d| (t.track_id, d)))
            .collect();
        for &(di, track_id) in &result.assignments {
            if let Some(&smoothed) = by_track.get(&track_id) {
                let det = &mut frame.detections[di];
                *det = det.with_distance_m(smoothed).expect("smoothed distance is valid");
            }
        }
    }
    let tracked = SequenceFile { header: seq.header.clone(), frames };
    let smoothed_report = run_eval(&tracked, eval_cfg)?;
    Ok((tracked, raw_report, smoothed_report))
}

/// Replace detection distances with the triangulation baseline: cast the
/// ray through each box's bottom-center pixel. Rays above the horizon clamp
/// to `d_max` (the geometric method cannot range them).
pub fn run_triangulate(
    seq: &SequenceFile,
    pose: &CameraPose,
    d_max: f64,
) -> Result<SequenceFile, PipelineError> {
    let pose = pose.validated()?;
    let mut frames = seq.frames.clone();
    for frame in &mut frames {
        for det in &mut frame.detections {
            let (u, v) = det.bbox.bottom_center();
            let d = match triangulate_distance(&pose, u, v) {
                Ok(d) => d.min(d_max),
                Err(GeometryError::AboveHorizon(..)) => d_max,
                Err(e) => return Err(e.into()),
            };
            *det = det.with_distance_m(d).expect("triangulated distance is valid");
        }
    }
    Ok(SequenceFile { header: seq.header.clone(), frames })
}
