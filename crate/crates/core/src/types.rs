//! Object points, constellations and frame identifiers.

use std::fmt;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

/// Largest label universe representable with one-byte label indexes.
pub const MAX_LABELS: usize = 256;

/// Default number of detectable classes (COCO-trained detector).
pub const DEFAULT_NUM_LABELS: usize = 80;

/// Object class index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Label(pub u8);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fixed-capacity set of labels backed by a 256-bit mask.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct LabelSet {
    bits: [u64; 4],
}

impl LabelSet {
    pub const fn empty() -> Self {
        Self { bits: [0; 4] }
    }

    /// Every representable label.
    pub const fn all() -> Self {
        Self { bits: [u64::MAX; 4] }
    }

    /// Labels `start..end` (end exclusive, clamped to [`MAX_LABELS`]).
    pub fn range(start: usize, end: usize) -> Self {
        let mut set = Self::empty();
        for i in start..end.min(MAX_LABELS) {
            set.insert(Label(i as u8));
        }
        set
    }

    pub fn insert(&mut self, label: Label) {
        let i = label.index();
        self.bits[i / 64] |= 1 << (i % 64);
    }

    pub fn contains(&self, label: Label) -> bool {
        let i = label.index();
        self.bits[i / 64] & (1 << (i % 64)) != 0
    }

    pub fn intersection(&self, other: &Self) -> Self {
        let mut bits = [0; 4];
        for (i, b) in bits.iter_mut().enumerate() {
            *b = self.bits[i] & other.bits[i];
        }
        Self { bits }
    }

    pub fn is_empty(&self) -> bool {
        self.bits.iter().all(|&b| b == 0)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Labels in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = Label> + '_ {
        (0..MAX_LABELS)
            .map(|i| Label(i as u8))
            .filter(move |&l| self.contains(l))
    }
}

impl FromIterator<Label> for LabelSet {
    fn from_iter<I: IntoIterator<Item = Label>>(iter: I) -> Self {
        let mut set = Self::empty();
        for l in iter {
            set.insert(l);
        }
        set
    }
}

impl fmt::Debug for LabelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter().map(|l| l.0)).finish()
    }
}

/// One detected object: its class and an estimate of its 3D position in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectPoint {
    pub label: Label,
    pub position: Point3<f64>,
}

impl ObjectPoint {
    pub fn new(label: Label, x: f64, y: f64, z: f64) -> Self {
        Self {
            label,
            position: Point3::new(x, y, z),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|c| c.is_finite())
    }
}

/// Identifies one frame of one robot.
///
/// Widths follow the wire layout: one byte of robot index, two bytes of
/// frame index. Ordering is by robot, then frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameId {
    pub robot: u8,
    pub frame: u16,
}

impl FrameId {
    pub const fn new(robot: u8, frame: u16) -> Self {
        Self { robot, frame }
    }

    /// True when both frames come from the same robot and lie less than
    /// `window` frames apart. Such pairs never count as loop closures.
    pub fn is_neighbor(&self, other: &FrameId, window: u32) -> bool {
        self.robot == other.robot && (self.frame.abs_diff(other.frame) as u32) < window
    }

    /// Key for the global arrival order: round-robin by frame index across robots.
    pub fn arrival_key(&self) -> (u16, u8) {
        (self.frame, self.robot)
    }
}

impl fmt::Display for FrameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.robot, self.frame)
    }
}

/// All object points observed in one frame. Object order is ingestion order;
/// association results refer to positions in `objects`.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    pub id: FrameId,
    pub objects: Vec<ObjectPoint>,
}

impl Constellation {
    pub fn new(id: FrameId, objects: Vec<ObjectPoint>) -> Self {
        Self { id, objects }
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn labels(&self) -> LabelSet {
        self.objects.iter().map(|o| o.label).collect()
    }

    /// Centroid of the object positions, `None` when the frame is empty.
    pub fn centroid(&self) -> Option<Point3<f64>> {
        if self.objects.is_empty() {
            return None;
        }
        let sum = self
            .objects
            .iter()
            .fold(nalgebra::Vector3::zeros(), |acc, o| acc + o.position.coords);
        Some(Point3::from(sum / self.objects.len() as f64))
    }
}
