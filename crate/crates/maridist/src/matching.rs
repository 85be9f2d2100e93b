//! IoU computation and IoU-gated detection/ground-truth matching. The greedy
//! confidence-descending rule here decides TP/FP for AP and which pairs feed
//! the distance-error metrics.

use crate::types::{BBox, Detection, GroundTruthObject};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Intersection over union of two boxes.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x2().min(b.x2()) - a.x1().max(b.x1())).max(0.0);
    let iy = (a.y2().min(b.y2()) - a.y1().max(b.y1())).max(0.0);
    let inter = ix * iy;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPair {
    pub detection: usize,
    pub ground_truth: usize,
    pub iou: f64,
    /// |d - d_hat|, absent when the detection carries no metric distance.
    pub error_m: Option<f64>,
    pub confidence: f64,
    pub gt_distance_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    pub pairs: Vec<MatchedPair>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_gt: Vec<usize>,
    pub iou_threshold: f64,
}

/// Greedy matching in descending confidence order: each detection takes the
/// still-unmatched ground truth (of the same class when `class_aware`) with
/// the highest IoU at or above the threshold. Confidence ties keep input
/// order; IoU ties go to the lower ground-truth index.
pub fn match_detections(
    detections: &[Detection],
    ground_truth: &[GroundTruthObject],
    iou_threshold: f64,
    class_aware: bool,
) -> MatchSet {
    let mut order: Vec<usize> = (0..detections.len()).collect();
    order.sort_by(|&a, &b| {
        detections[b]
            .confidence()
            .partial_cmp(&detections[a].confidence())
            .unwrap_or(std::cmp::Ordering::Equal)
    });

    let mut gt_taken = vec![false; ground_truth.len()];
    let mut pairs = Vec::new();
    let mut unmatched_detections = Vec::new();

    for &di in &order {
        let det = &detections[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, gt) in ground_truth.iter().enumerate() {
            if gt_taken[gi] || (class_aware && gt.class != det.class) {
                continue;
            }
            let v = iou(&det.bbox, &gt.bbox);
            if v >= iou_threshold && best.map_or(true, |(_, bv)| v > bv) {
                best = Some((gi, v));
            }
        }
        match best {
            Some((gi, v)) => {
                gt_taken[gi] = true;
                let gt = &ground_truth[gi];
                pairs.push(MatchedPair {
                    detection: di,
                    ground_truth: gi,
                    iou: v,
                    error_m: det.distance_m().map(|d| (gt.distance_m() - d).abs()),
                    confidence: det.confidence(),
                    gt_distance_m: gt.distance_m(),
                });
            }
            None => unmatched_detections.push(di),
        }
    }
    unmatched_detections.sort_unstable();

    let unmatched_gt = gt_taken
        .iter()
        .enumerate()
        .filter(|(_, taken)| !**taken)
        .map(|(gi, _)| gi)
        .collect();

    MatchSet { pairs, unmatched_detections, unmatched_gt, iou_threshold }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{GtSource, ObjectClass};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn bx(x1: f64, y1: f64, x2: f64, y2: f64) -> BBox {
        BBox::new(x1, y1, x2, y2).unwrap()
    }

    fn det(b: BBox, conf: f64, dist: f64) -> Detection {
        Detection::new(b, ObjectClass::Boat, conf, 0.0, Some(dist)).unwrap()
    }

    fn gt(b: BBox, dist: f64) -> GroundTruthObject {
        GroundTruthObject::new(b, ObjectClass::Boat, dist, GtSource::Chart).unwrap()
    }

    #[test]
    fn iou_identical() {
        let a = bx(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
    }

    #[test]
    fn iou_disjoint() {
        assert_eq!(iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(20.0, 20.0, 30.0, 30.0)), 0.0);
    }

    #[test]
    fn iou_half_overlap() {
        // inter = 50, union = 150
        let v = iou(&bx(0.0, 0.0, 10.0, 10.0), &bx(5.0, 0.0, 15.0, 10.0));
        assert_relative_eq!(v, 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn single_match_above_threshold() {
        let d = vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.9, 100.0)];
        let g = vec![gt(bx(0.0, 0.0, 10.0, 9.0), 110.0)];
        let m = match_detections(&d, &g, 0.5, true);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].error_m, Some(10.0));
        assert!(m.unmatched_detections.is_empty());
        assert!(m.unmatched_gt.is_empty());
    }

    #[test]
    fn below_threshold_unmatched() {
        let d = vec![det(bx(0.0, 0.0, 10.0, 10.0), 0.9, 100.0)];
        let g = vec![gt(bx(7.0, 0.0, 17.0, 10.0), 110.0)];
        assert!(iou(&d[0].bbox, &g[0].bbox) < 0.5);
        let m = match_detections(&d, &g, 0.5, true);
        assert!(m.pairs.is_empty());
        assert_eq!(m.unmatched_detections, vec![0]);
        assert_eq!(m.unmatched_gt, vec![0]);
    }

    #[test]
    fn higher_confidence_wins_contested_gt() {
        // det 0: conf 0.9, IoU ~0.6; det 1: conf 0.8, IoU ~0.7 over the same GT
        let g = vec![gt(bx(0.0, 0.0, 10.0, 10.0), 100.0)];
        let d = vec![
            det(bx(0.0, 0.0, 10.0, 6.3), 0.9, 100.0),
            det(bx(0.0, 0.0, 10.0, 7.1), 0.8, 100.0),
        ];
        assert!(iou(&d[0].bbox, &g[0].bbox) > 0.5 && iou(&d[1].bbox, &g[0].bbox) > 0.5);
        let m = match_detections(&d, &g, 0.5, true);
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.pairs[0].detection, 0);
        assert_eq!(m.unmatched_detections, vec![1]);
    }

    #[test]
    fn class_aware_blocks_cross_class() {
        let b = bx(0.0, 0.0, 10.0, 10.0);
        let d = vec![Detection::new(b, ObjectClass::Buoy, 0.9, 0.0, Some(100.0)).unwrap()];
        let g = vec![gt(b, 100.0)];
        assert!(match_detections(&d, &g, 0.5, true).pairs.is_empty());
        assert_eq!(match_detections(&d, &g, 0.5, false).pairs.len(), 1);
    }

    #[test]
    fn empty_inputs() {
        let m = match_detections(&[], &[], 0.5, true);
        assert!(m.pairs.is_empty() && m.unmatched_detections.is_empty() && m.unmatched_gt.is_empty());
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(
            a in (0.0..50.0f64, 0.0..50.0f64, 1.0..50.0f64, 1.0..50.0f64),
            b in (0.0..50.0f64, 0.0..50.0f64, 1.0..50.0f64, 1.0..50.0f64),
        ) {
            let ba = bx(a.0, a.1, a.0 + a.2, a.1 + a.3);
            let bb = bx(b.0, b.1, b.0 + b.2, b.1 + b.3);
            let v = iou(&ba, &bb);
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!((v - iou(&bb, &ba)).abs() < 1e-12);
        }

        #[test]
        fn matching_is_partial_injection_and_gate_monotone(
            seed in 0u64..1000,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut dets = Vec::new();
            let mut gts = Vec::new();
            for _ in 0..rng.gen_range(0..6) {
                let x = rng.gen_range(0.0..40.0);
                let y = rng.gen_range(0.0..40.0);
                dets.push(det(bx(x, y, x + rng.gen_range(2.0..15.0), y + rng.gen_range(2.0..15.0)),
                              rng.gen_range(0.0..1.0), rng.gen_range(0.0..500.0)));
            }
            for _ in 0..rng.gen_range(0..5) {
                let x = rng.gen_range(0.0..40.0);
                let y = rng.gen_range(0.0..40.0);
                gts.push(gt(bx(x, y, x + rng.gen_range(2.0..15.0), y + rng.gen_range(2.0..15.0)),
                            rng.gen_range(0.0..500.0)));
            }
            let lo = match_detections(&dets, &gts, 0.3, true);
            let hi = match_detections(&dets, &gts, 0.6, true);
            prop_assert!(lo.pairs.len() <= dets.len().min(gts.len()));
            prop_assert!(hi.pairs.len() <= lo.pairs.len());
            for p in &lo.pairs {
                prop_assert!(p.iou >= 0.3);
            }
        }
    }
}
