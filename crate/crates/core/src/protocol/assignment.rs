use std::ops::Range;

use thiserror::Error;

use crate::types::{Label, LabelSet, MAX_LABELS};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("a fleet needs at least one robot")]
    NoRobots,
    #[error("{robots} robots cannot share {labels} labels without leaving a robot empty")]
    TooManyRobots { robots: usize, labels: usize },
    #[error("label universe of {0} does not fit one-byte label indexes")]
    TooManyLabels(usize),
}

/// Contiguous label shards, one per robot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAssignment {
    shards: Vec<Range<usize>>,
    num_labels: usize,
}

impl LabelAssignment {
    pub fn num_robots(&self) -> usize {
        self.shards.len()
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn shard_range(&self, robot: u8) -> Range<usize> {
        self.shards[robot as usize].clone()
    }

    pub fn shard(&self, robot: u8) -> LabelSet {
        let r = self.shard_range(robot);
        LabelSet::range(r.start, r.end)
    }

    /// Robot responsible for `label`, `None` outside the universe.
    pub fn owner(&self, label: Label) -> Option<u8> {
        let l = label.index();
        if l >= self.num_labels {
            return None;
        }
        let i = self.shards.partition_point(|r| r.end <= l);
        Some(i as u8)
    }
}

/// Splits `num_labels` consecutive label indexes into `num_robots` near-equal
/// ranges. The first `num_labels % num_robots` robots get one extra label.
pub fn assign_labels(num_robots: usize, num_labels: usize) -> Result<LabelAssignment, AssignmentError> {
    if num_labels > MAX_LABELS {
        return Err(AssignmentError::TooManyLabels(num_labels));
    }
    if num_robots == 0 {
        return Err(AssignmentError::NoRobots);
    }
    if num_robots > num_labels {
        return Err(AssignmentError::TooManyRobots { robots: num_robots, labels: num_labels });
    }
    let base = num_labels / num_robots;
    let extra = num_labels % num_robots;
    let mut start = 0;
    let shards = (0..num_robots)
        .map(|r| {
            let len = base + usize::from(r < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect();
    Ok(LabelAssignment { shards, num_labels })
}
