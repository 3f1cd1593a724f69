//! Geometric data association between two constellations and the resulting
//! loop-closure score.
//!
//! Each object is described by its distances to the closest instance of every
//! label the two constellations have in common. Objects of the same class are
//! paired when their descriptors are mutual nearest neighbours and closer than
//! a threshold `d`. Because the descriptors only use intra-constellation
//! distances, the whole procedure is independent of the frame the positions
//! are expressed in.

use thiserror::Error;

use crate::descriptor::{JaccardTerms, SemanticDescriptor};
use crate::types::{Constellation, LabelSet};

/// Default association threshold in meters.
pub const DEFAULT_MATCH_THRESHOLD: f64 = 0.25;

#[derive(Debug, Error, PartialEq)]
pub enum MatchingError {
    #[error("object index {index} out of range for constellation with {len} objects")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("label {label} outside a universe of {num_labels} labels")]
    LabelOutOfRange { label: u8, num_labels: usize },
}

/// Labels with at least one instance in both constellations.
pub fn common_labels(a: &Constellation, b: &Constellation) -> LabelSet {
    a.labels().intersection(&b.labels())
}

/// Dense per-label distance vector of one object.
#[derive(Clone, Debug, PartialEq)]
pub struct SurroundingsVector {
    values: Vec<f64>,
}

impl SurroundingsVector {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn distance(&self, other: &Self) -> f64 {
        euclidean(&self.values, &other.values)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Surroundings vector of object `k` of `c` over a universe of `num_labels`.
///
/// Entry `l` is the distance from object `k` to the closest instance of `l`
/// in `c` when `l` is in `common`, else 0. The closest instance may be `k`
/// itself, so the entry at `k`'s own label is always 0. Labels in `common`
/// that `c` does not contain also yield 0.
pub fn surroundings_vector(
    c: &Constellation,
    k: usize,
    common: &LabelSet,
    num_labels: usize,
) -> Result<SurroundingsVector, MatchingError> {
    if k >= c.objects.len() {
        return Err(MatchingError::IndexOutOfRange { index: k, len: c.objects.len() });
    }
    let mut values = vec![0.0; num_labels];
    for label in common.iter() {
        if label.index() >= num_labels {
            return Err(MatchingError::LabelOutOfRange { label: label.0, num_labels });
        }
        values[label.index()] = nearest_of_label(c, k, label).unwrap_or(0.0);
    }
    Ok(SurroundingsVector { values })
}

fn nearest_of_label(c: &Constellation, k: usize, label: crate::types::Label) -> Option<f64> {
    let p = c.objects[k].position;
    c.objects
        .iter()
        .filter(|o| o.label == label)
        .map(|o| (o.position - p).norm())
        .min_by(|x, y| x.total_cmp(y))
}

// Surroundings vectors restricted to the common labels, in increasing label
// order. Entries outside the common set are zero on both sides, so distances
// between compact vectors equal distances between the dense ones.
fn compact_vectors(c: &Constellation, common: &LabelSet) -> Vec<Vec<f64>> {
    (0..c.objects.len())
        .map(|k| {
            common
                .iter()
                .map(|l| nearest_of_label(c, k, l).unwrap_or(0.0))
                .collect()
        })
        .collect()
}

/// One-to-one object correspondences between two constellations.
#[derive(Clone, Debug, PartialEq)]
pub struct MatchSet {
    /// `(k, n)`: object `k` of the first constellation with object `n` of the second.
    pub pairs: Vec<(usize, usize)>,
    pub threshold_used: f64,
}

impl MatchSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Mutual-nearest-neighbour association under threshold `d` (strict).
///
/// Ties in the nearest-neighbour search go to the lowest object index.
pub fn associate(a: &Constellation, b: &Constellation, d: f64) -> MatchSet {
    let common = common_labels(a, b);
    if common.is_empty() {
        return MatchSet { pairs: Vec::new(), threshold_used: d };
    }
    let va = compact_vectors(a, &common);
    let vb = compact_vectors(b, &common);

    // dist[k][n], NaN-free; only same-label entries are ever read
    let dist: Vec<Vec<f64>> = va
        .iter()
        .map(|x| vb.iter().map(|y| euclidean(x, y)).collect())
        .collect();

    let best_in_b: Vec<Option<usize>> = (0..a.objects.len())
        .map(|k| {
            argmin(
                (0..b.objects.len())
                    .filter(|&n| b.objects[n].label == a.objects[k].label)
                    .map(|n| (n, dist[k][n])),
            )
        })
        .collect();
    let best_in_a: Vec<Option<usize>> = (0..b.objects.len())
        .map(|n| {
            argmin(
                (0..a.objects.len())
                    .filter(|&k| a.objects[k].label == b.objects[n].label)
                    .map(|k| (k, dist[k][n])),
            )
        })
        .collect();

    let pairs = best_in_b
        .iter()
        .enumerate()
        .filter_map(|(k, &n)| {
            let n = n?;
            (best_in_a[n] == Some(k) && dist[k][n] < d).then_some((k, n))
        })
        .collect();
    MatchSet { pairs, threshold_used: d }
}

// first index wins on ties
fn argmin(candidates: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in candidates {
        match best {
            Some((_, bv)) if v >= bv => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

/// Semantic similarity, geometric agreement and their product.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairScore {
    /// Jaccard index of the full semantic descriptors.
    pub s: f64,
    /// Matched objects over common objects.
    pub g: f64,
    pub score: f64,
}

impl PairScore {
    pub const ZERO: PairScore = PairScore { s: 0.0, g: 0.0, score: 0.0 };
}

pub fn pair_score(a: &Constellation, b: &Constellation, d: f64) -> PairScore {
    let sa = SemanticDescriptor::from_constellation(a);
    let sb = SemanticDescriptor::from_constellation(b);
    let terms = JaccardTerms::between(&sa, &sb, &LabelSet::all());
    if terms.intersection == 0 {
        return PairScore::ZERO;
    }
    let s = terms.ratio();
    let matches = associate(a, b, d);
    let g = matches.len() as f64 / terms.intersection as f64;
    PairScore { s, g, score: s * g }
}
