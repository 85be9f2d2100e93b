//! Detection metrics (precision, recall, AP, mAP) and distance-error metrics
//! (confidence-weighted error E, MDE, outlier rate, MAE/MAPE, binned stats).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matching::{match_detections, MatchSet, MatchedPair};
use crate::types::{Frame, ObjectClass};

pub const DEFAULT_OUTLIER_REL_THRESHOLD: f64 = 0.25;

/// Thresholds 0.50, 0.55, ..., 0.95 backing the mAP@0.5:0.95 header.
pub fn coco_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no ground truth for class {0}")]
    NoGroundTruth(String),
    #[error("no ground truth in any frame")]
    NoGroundTruthAnywhere,
    #[error("no matched pairs with distance estimates")]
    NoMatches,
    #[error("total confidence is zero")]
    ZeroTotalConfidence,
    #[error("invalid bin edges")]
    InvalidBinEdges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceErrorSummary {
    pub mde_m: f64,
    pub outlier_rate: f64,
    pub mae_m: f64,
    /// Mean of e_i / d_i; absent when any matched GT distance is zero.
    pub mape: Option<f64>,
    pub count: usize,
}

/// All-point interpolated average precision for one class at one IoU
/// threshold. TP/FP per detection follow the greedy matching rule, decided
/// frame by frame; the PR curve ranks detections by confidence across the
/// whole sequence. `None` when the class has no ground truth.
pub fn average_precision(
    frames: &[Frame],
    class: &ObjectClass,
    iou_threshold: f64,
) -> Result<Option<f64>, MetricsError> {
    let mut scored: Vec<(f64, bool)> = Vec::new();
    let mut n_gt = 0usize;
    for frame in frames {
        let dets: Vec<_> = frame.detections.iter().filter(|d| &d.class == class).cloned().collect();
        let gts: Vec<_> =
            frame.ground_truth.iter().filter(|g| &g.class == class).cloned().collect();
        n_gt += gts.len();
        let m = match_detections(&dets, &gts, iou_threshold, true);
        let mut tp = vec![false; dets.len()];
        for p in &m.pairs {
            tp[p.detection] = true;
        }
        for (i, d) in dets.iter().enumerate() {
            scored.push((d.confidence(), tp[i]));
        }
    }
    if n_gt == 0 {
        return Ok(None);
    }
    if scored.is_empty() {
        return Ok(Some(0.0));
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));

    // precision envelope over the ranked list, scanned from the tail
    let n = scored.len();
    let mut tp_cum = 0usize;
    let mut precisions = Vec::with_capacity(n);
    for (k, (_, is_tp)) in scored.iter().enumerate() {
        if *is_tp {
            tp_cum += 1;
        }
        precisions.push(tp_cum as f64 / (k + 1) as f64);
    }
    let mut envelope = precisions.clone();
    for k in (0..n - 1).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    let ap: f64 = scored
        .iter()
        .enumerate()
        .filter(|(_, (_, is_tp))| *is_tp)
        .map(|(k, _)| envelope[k])
        .sum::<f64>()
        / n_gt as f64;
    Ok(Some(ap))
}

/// Mean over classes (with ground truth) of mean over thresholds of AP.
pub fn mean_ap(
    frames: &[Frame],
    classes: &[ObjectClass],
    thresholds: &[f64],
) -> Result<f64, MetricsError> {
    let mut class_aps = Vec::new();
    for class in classes {
        let mut aps = Vec::new();
        for &t in thresholds {
            if let Some(ap) = average_precision(frames, class, t)? {
                aps.push(ap);
            }
        }
        if !aps.is_empty() {
            class_aps.push(aps.iter().sum::<f64>() / aps.len() as f64);
        }
    }
    if class_aps.is_empty() {
        return Err(MetricsError::NoGroundTruthAnywhere);
    }
    Ok(class_aps.iter().sum::<f64>() / class_aps.len() as f64)
}

/// Distinct classes appearing anywhere in the sequence, sorted for
/// deterministic reporting.
pub fn classes_present(frames: &[Frame]) -> Vec<ObjectClass> {
    let mut set = std::collections::BTreeSet::new();
    for f in frames {
        for d in &f.detections {
            set.insert(d.class.clone());
        }
        for g in &f.ground_truth {
            set.insert(g.class.clone());
        }
    }
    set.into_iter().collect()
}

fn pairs_with_errors(matches: &[MatchSet]) -> Vec<&MatchedPair> {
    matches.iter().flat_map(|m| m.pairs.iter()).filter(|p| p.error_m.is_some()).collect()
}

/// Confidence-weighted mean absolute distance error over matched pairs:
/// E = sum(c_i * e_i) / sum(c_i).
pub fn weighted_distance_error(matches: &[MatchSet]) -> Result<f64, MetricsError> {
    let pairs = pairs_with_errors(matches);
    if pairs.is_empty() {
        return Err(MetricsError::NoMatches);
    }
    let total_c: f64 = pairs.iter().map(|p| p.confidence).sum();
    if total_c <= 0.0 {
        return Err(MetricsError::ZeroTotalConfidence);
    }
    let weighted: f64 = pairs.iter().map(|p| p.confidence * p.error_m.unwrap()).sum();
    Ok(weighted / total_c)
}

/// Unweighted error statistics over matched pairs. A pair is an outlier when
/// e_i > threshold * d_i (equivalent to relative error above the threshold,
/// without dividing by a possibly-zero ground-truth distance).
pub fn distance_error_summary(
    matches: &[MatchSet],
    outlier_rel_threshold: f64,
) -> Result<DistanceErrorSummary, MetricsError> {
    let pairs = pairs_with_errors(matches);
    if pairs.is_empty() {
        return Err(MetricsError::NoMatches);
    }
    let n = pairs.len();
    let mde: f64 = pairs.iter().map(|p| p.error_m.unwrap()).sum::<f64>() / n as f64;
    let outliers =
        pairs.iter().filter(|p| p.error_m.unwrap() > outlier_rel_threshold * p.gt_distance_m).count();
    let mape = if pairs.iter().any(|p| p.gt_distance_m == 0.0) {
        None
    } else {
        Some(pairs.iter().map(|p| p.error_m.unwrap() / p.gt_distance_m).sum::<f64>() / n as f64)
    };
    Ok(DistanceErrorSummary {
        mde_m: mde,
        outlier_rate: outliers as f64 / n as f64,
        mae_m: mde,
        mape,
        count: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo_m: f64,
    pub hi_m: f64,
    /// Absent when the bin holds no matched pairs.
    pub weighted_error_m: Option<f64>,
    pub summary: Option<DistanceErrorSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedStats {
    pub edges_m: Vec<f64>,
    pub bins: Vec<BinStats>,
}

/// Per-bin distance errors, binned by ground-truth distance. Membership is
/// [lo, hi) except the final bin, which includes its upper edge (an infinite
/// final edge makes it open-ended).
pub fn binned_distance_errors(
    matches: &[MatchSet],
    bin_edges: &[f64],
    outlier_rel_threshold: f64,
) -> Result<BinnedStats, MetricsError> {
    if bin_edges.len() < 2 || bin_edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(MetricsError::InvalidBinEdges);
    }
    let n_bins = bin_edges.len() - 1;
    let mut bins = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        let (lo, hi) = (bin_edges[b], bin_edges[b + 1]);
        let last = b == n_bins - 1;
        let in_bin = |d: f64| d >= lo && (d < hi || (last && d <= hi));
        let subset: Vec<MatchSet> = matches
            .iter()
            .map(|m| MatchSet {
                pairs: m
                    .pairs
                    .iter()
                    .filter(|p| p.error_m.is_some() && in_bin(p.gt_distance_m))
                    .cloned()
                    .collect(),
                unmatched_detections: Vec::new(),
                unmatched_gt: Vec::new(),
                iou_threshold: m.iou_threshold,
            })
            .collect();
        let weighted = weighted_distance_error(&subset).ok();
        let summary = distance_error_summary(&subset, outlier_rel_threshold).ok();
        bins.push(BinStats { lo_m: lo, hi_m: hi, weighted_error_m: weighted, summary });
    }
    Ok(BinnedStats { edges_m: bin_edges.to_vec(), bins })
}

/// Pooled precision/recall at a single IoU threshold across all frames.
pub fn precision_recall(frames: &[Frame], iou_threshold: f64, class_aware: bool) -> (f64, f64) {
    let mut tp = 0usize;
    let mut n_det = 0usize;
    let mut n_gt = 0usize;
    for f in frames {
        let m = match_detections(&f.detections, &f.ground_truth, iou_threshold, class_aware);
        tp += m.pairs.len();
        n_det += f.detections.len();
        n_gt += f.ground_truth.len();
    }
    let precision = if n_det == 0 { 0.0 } else { tp as f64 / n_det as f64 };
    let recall = if n_gt == 0 { 0.0 } else { tp as f64 / n_gt as f64 };
    (precision, recall)
}
