//! Precision-recall over loop-closure records.

use std::collections::BTreeMap;

use super::ground_truth::GroundTruth;
use crate::simulator::SimilarityRecord;
use crate::types::FrameId;

/// Ground-truth score from which a pair counts as a real loop closure.
pub const DEFAULT_GT_POSITIVE_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalParams {
    pub gt_positive_threshold: f64,
    pub neighbor_exclusion: u32,
}

impl Default for EvalParams {
    fn default() -> Self {
        Self {
            gt_positive_threshold: DEFAULT_GT_POSITIVE_THRESHOLD,
            neighbor_exclusion: crate::simulator::DEFAULT_NEIGHBOR_EXCLUSION,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrCurve {
    /// One point per distinct record score, highest threshold first.
    pub points: Vec<PrPoint>,
    pub auc: f64,
    /// Ground-truth positive pairs outside the neighbour window.
    pub positives: usize,
    /// Set when no record survived filtering.
    pub no_detections: bool,
}

/// Number of frame pairs that are true loop closures.
pub fn count_positives(gt: &GroundTruth, params: &EvalParams) -> usize {
    let frames = gt.frames();
    let mut n = 0;
    for (i, &a) in frames.iter().enumerate() {
        for &b in &frames[i + 1..] {
            if a.is_neighbor(&b, params.neighbor_exclusion) {
                continue;
            }
            if gt.score(a, b).is_some_and(|s| s >= params.gt_positive_threshold) {
                n += 1;
            }
        }
    }
    n
}

/// Sweeps the record scores as decision thresholds.
///
/// A record is a true positive when its pair's ground-truth score reaches
/// `gt_positive_threshold`; frames unknown to the ground truth count as
/// negatives. Duplicate pairs keep their best score. The area is integrated
/// with trapezoids over recall, starting from recall 0 at the first
/// point's precision.
pub fn evaluate(records: &[SimilarityRecord], gt: &GroundTruth, params: &EvalParams) -> PrCurve {
    let positives = count_positives(gt, params);

    let mut best: BTreeMap<(FrameId, FrameId), f64> = BTreeMap::new();
    for r in records {
        if r.query.is_neighbor(&r.matched, params.neighbor_exclusion) {
            continue;
        }
        let e = best.entry(r.pair()).or_insert(f64::NEG_INFINITY);
        *e = e.max(r.score);
    }
    if best.is_empty() {
        return PrCurve { points: Vec::new(), auc: 0.0, positives, no_detections: true };
    }

    let mut scored: Vec<(f64, bool)> = best
        .into_iter()
        .map(|((a, b), s)| (s, gt.score(a, b).is_some_and(|g| g >= params.gt_positive_threshold)))
        .collect();
    scored.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < scored.len() {
        let threshold = scored[i].0;
        while i < scored.len() && scored[i].0 == threshold {
            if scored[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold,
            precision: tp as f64 / (tp + fp) as f64,
            recall: if positives == 0 { 0.0 } else { tp as f64 / positives as f64 },
        });
    }

    let mut auc = 0.0;
    let (mut prev_r, mut prev_p) = (0.0, points[0].precision);
    for p in &points {
        auc += (p.recall - prev_r) * (p.precision + prev_p) / 2.0;
        prev_r = p.recall;
        prev_p = p.precision;
    }
    PrCurve { points, auc: auc.clamp(0.0, 1.0), positives, no_detections: false }
}
