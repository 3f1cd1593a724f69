//! Semantic descriptors: sparse per-class instance histograms, and the Jaccard
//! index used to compare them.

use std::collections::BTreeMap;

use crate::types::{Constellation, Label, LabelSet};

/// Sparse histogram of class counts. Only non-zero bins are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SemanticDescriptor {
    counts: BTreeMap<Label, u32>,
}

impl SemanticDescriptor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_constellation(c: &Constellation) -> Self {
        let mut counts = BTreeMap::new();
        for o in &c.objects {
            *counts.entry(o.label).or_insert(0) += 1;
        }
        Self { counts }
    }

    /// Builds a descriptor from `(label, count)` pairs; zero counts are dropped
    /// and repeated labels accumulate.
    pub fn from_counts<I: IntoIterator<Item = (Label, u32)>>(entries: I) -> Self {
        let mut counts = BTreeMap::new();
        for (l, n) in entries {
            if n > 0 {
                *counts.entry(l).or_insert(0) += n;
            }
        }
        Self { counts }
    }

    pub fn get(&self, label: Label) -> u32 {
        self.counts.get(&label).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Label, u32)> + '_ {
        self.counts.iter().map(|(&l, &n)| (l, n))
    }

    /// Number of distinct classes present.
    pub fn support_len(&self) -> usize {
        self.counts.len()
    }

    pub fn support(&self) -> LabelSet {
        self.counts.keys().copied().collect()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Sum of all bins, i.e. the object count of the source constellation.
    pub fn total(&self) -> u32 {
        self.counts.values().sum()
    }

    /// The bins falling inside `labels`.
    pub fn restrict(&self, labels: &LabelSet) -> Self {
        Self {
            counts: self
                .counts
                .iter()
                .filter(|(l, _)| labels.contains(**l))
                .map(|(&l, &n)| (l, n))
                .collect(),
        }
    }
}

pub fn build_semantic_descriptor(c: &Constellation) -> SemanticDescriptor {
    SemanticDescriptor::from_constellation(c)
}

/// Numerator and denominator of a histogram Jaccard index.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct JaccardTerms {
    /// Sum of per-label minima.
    pub intersection: u32,
    /// Sum of per-label maxima.
    pub union: u32,
}

impl JaccardTerms {
    pub fn between(a: &SemanticDescriptor, b: &SemanticDescriptor, labels: &LabelSet) -> Self {
        let mut terms = JaccardTerms::default();
        // merge-walk both sorted maps
        let mut ia = a.counts.iter().filter(|(l, _)| labels.contains(**l)).peekable();
        let mut ib = b.counts.iter().filter(|(l, _)| labels.contains(**l)).peekable();
        loop {
            match (ia.peek(), ib.peek()) {
                (Some(&(la, &na)), Some(&(lb, &nb))) => {
                    if la == lb {
                        terms.intersection += na.min(nb);
                        terms.union += na.max(nb);
                        ia.next();
                        ib.next();
                    } else if la < lb {
                        terms.union += na;
                        ia.next();
                    } else {
                        terms.union += nb;
                        ib.next();
                    }
                }
                (Some(&(_, &na)), None) => {
                    terms.union += na;
                    ia.next();
                }
                (None, Some(&(_, &nb))) => {
                    terms.union += nb;
                    ib.next();
                }
                (None, None) => break,
            }
        }
        terms
    }

    /// `intersection / union`, or 0 when nothing is comparable.
    pub fn ratio(&self) -> f64 {
        if self.union == 0 {
            0.0
        } else {
            self.intersection as f64 / self.union as f64
        }
    }
}

/// Jaccard index of two histograms restricted to `labels`.
///
/// Pass [`LabelSet::all`] for the full-descriptor comparison or a robot's
/// shard for a partial comparison. Returns 0 when neither side has any
/// object in `labels`.
pub fn jaccard(a: &SemanticDescriptor, b: &SemanticDescriptor, labels: &LabelSet) -> f64 {
    JaccardTerms::between(a, b, labels).ratio()
}
