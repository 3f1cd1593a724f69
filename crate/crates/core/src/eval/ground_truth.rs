use std::collections::BTreeMap;

use log::warn;
use nalgebra::Point3;

use super::log::DetectionLog;
use crate::types::FrameId;

/// Scene distance at which the ground-truth score reaches zero.
pub const DEFAULT_GT_CUTOFF: f64 = 1.0;

/// Whether two frames observe the same place.
#[derive(Clone, Debug, PartialEq)]
pub enum GroundTruth {
    /// Estimated position of the observed scene per frame; pairs score
    /// `max(0, 1 - distance / cutoff)`.
    ScenePositions { positions: BTreeMap<FrameId, Point3<f64>>, cutoff: f64 },
    /// Known place identifiers; pairs score 1 on the same place, else 0.
    SceneIds(BTreeMap<FrameId, u32>),
}

impl GroundTruth {
    /// Score of a pair, `None` when either frame is unknown.
    pub fn score(&self, a: FrameId, b: FrameId) -> Option<f64> {
        match self {
            GroundTruth::ScenePositions { positions, cutoff } => {
                let d = (positions.get(&a)? - positions.get(&b)?).norm();
                Some(distance_score(d, *cutoff))
            }
            GroundTruth::SceneIds(ids) => Some(if ids.get(&a)? == ids.get(&b)? { 1.0 } else { 0.0 }),
        }
    }

    pub fn frames(&self) -> Vec<FrameId> {
        match self {
            GroundTruth::ScenePositions { positions, .. } => positions.keys().copied().collect(),
            GroundTruth::SceneIds(ids) => ids.keys().copied().collect(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            GroundTruth::ScenePositions { positions, .. } => positions.len(),
            GroundTruth::SceneIds(ids) => ids.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Linear ramp from 1 at distance 0 down to 0 at `cutoff` and beyond.
pub fn distance_score(distance: f64, cutoff: f64) -> f64 {
    if cutoff <= 0.0 {
        return if distance <= 0.0 { 1.0 } else { 0.0 };
    }
    (1.0 - distance / cutoff).max(0.0)
}

/// Scene positions from camera poses: the centroid of each frame's objects
/// mapped into the world frame. Frames without a pose or without objects are
/// left out.
pub fn ground_truth_from_poses(log: &DetectionLog, cutoff: f64) -> GroundTruth {
    let mut positions = BTreeMap::new();
    for rec in &log.records {
        let id = rec.id();
        let Some(pose) = rec.pose else {
            warn!("frame {id} has no pose; excluded from ground truth");
            continue;
        };
        let Some(centroid) = rec.constellation().centroid() else {
            warn!("frame {id} has no objects; excluded from ground truth");
            continue;
        };
        positions.insert(id, pose.to_world(&centroid));
    }
    GroundTruth::ScenePositions { positions, cutoff }
}
