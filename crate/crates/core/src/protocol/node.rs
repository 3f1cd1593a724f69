//! Per-robot query handling: splitting a descriptor over shard owners,
//! answering partial queries from the shard store, picking full-query
//! targets, and scoring full queries against recorded constellations.

use std::collections::BTreeMap;

use crate::descriptor::{jaccard, SemanticDescriptor};
use crate::matching::pair_score;
use crate::protocol::assignment::LabelAssignment;
use crate::protocol::codec::{quantize_score, CandidateResponseMsg, FullQueryMsg, PartialQueryMsg, ScoreResponseMsg};
use crate::types::{Constellation, FrameId, LabelSet};

/// A descriptor split by shard owner.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SplitQuery {
    /// Part owned by the querying robot itself; handled without communication.
    pub local: Option<PartialQueryMsg>,
    /// One message per other robot whose shard intersects the descriptor.
    pub remote: BTreeMap<u8, PartialQueryMsg>,
}

impl SplitQuery {
    pub fn all(&self) -> impl Iterator<Item = &PartialQueryMsg> {
        self.local.iter().chain(self.remote.values())
    }
}

/// Splits `desc` of frame `origin` into per-owner partial queries.
/// Labels outside the assignment's universe are dropped.
pub fn split_query(origin: FrameId, desc: &SemanticDescriptor, asg: &LabelAssignment) -> SplitQuery {
    let mut per_robot: BTreeMap<u8, Vec<_>> = BTreeMap::new();
    for (label, count) in desc.iter() {
        if let Some(owner) = asg.owner(label) {
            per_robot.entry(owner).or_default().push((label, count));
        }
    }
    let mut split = SplitQuery::default();
    for (robot, part) in per_robot {
        let msg = PartialQueryMsg::new(origin, &SemanticDescriptor::from_counts(part));
        if robot == origin.robot {
            split.local = Some(msg);
        } else {
            split.remote.insert(robot, msg);
        }
    }
    split
}

#[derive(Clone, Debug, PartialEq, Eq)]
struct StoredPartial {
    origin: FrameId,
    descriptor: SemanticDescriptor,
}

/// Partial descriptors received by one shard owner, in arrival order.
#[derive(Clone, Debug, Default)]
pub struct PartialStore {
    received: Vec<StoredPartial>,
}

impl PartialStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.received.len()
    }

    pub fn is_empty(&self) -> bool {
        self.received.is_empty()
    }

    /// Stored partials ranked against `msg`: non-zero scores only, neighbours
    /// of the query excluded, best first, ties by arrival.
    pub fn rank(&self, msg: &PartialQueryMsg, neighbor_exclusion: u32) -> Vec<(FrameId, f64)> {
        let query = msg.descriptor();
        let mut scored: Vec<(FrameId, f64)> = self
            .received
            .iter()
            .filter(|p| !p.origin.is_neighbor(&msg.origin, neighbor_exclusion))
            .map(|p| (p.origin, jaccard(&query, &p.descriptor, &LabelSet::all())))
            .filter(|&(_, s)| s > 0.0)
            .collect();
        // stable: equal scores keep arrival order
        scored.sort_by(|a, b| b.1.total_cmp(&a.1));
        scored
    }

    /// Answers with the `n_ret` best stored frames, then stores `msg`.
    pub fn handle_partial_query(
        &mut self,
        msg: &PartialQueryMsg,
        n_ret: usize,
        neighbor_exclusion: u32,
    ) -> CandidateResponseMsg {
        let candidates = self
            .rank(msg, neighbor_exclusion)
            .into_iter()
            .take(n_ret)
            .map(|(id, _)| id)
            .collect();
        self.received.push(StoredPartial { origin: msg.origin, descriptor: msg.descriptor() });
        CandidateResponseMsg { candidates }
    }
}

/// Robots to receive the full constellation: those named most often across
/// all candidate responses, ties to the lower robot id, at most `n_fq`.
pub fn select_full_query_targets<'a, I>(responses: I, n_fq: usize) -> Vec<u8>
where
    I: IntoIterator<Item = &'a CandidateResponseMsg>,
{
    let mut counts: BTreeMap<u8, usize> = BTreeMap::new();
    for r in responses {
        for id in &r.candidates {
            *counts.entry(id.robot).or_insert(0) += 1;
        }
    }
    let mut ranked: Vec<(u8, usize)> = counts.into_iter().collect();
    // BTreeMap order is by robot id, so a stable sort keeps the tie-break
    ranked.sort_by_key(|&(_, n)| std::cmp::Reverse(n));
    ranked.into_iter().take(n_fq).map(|(r, _)| r).collect()
}

/// Constellations a robot recorded itself.
#[derive(Clone, Debug, Default)]
pub struct ConstellationStore {
    frames: Vec<Constellation>,
}

impl ConstellationStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, c: Constellation) {
        self.frames.push(c);
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frames(&self) -> &[Constellation] {
        &self.frames
    }

    /// Raw scores of every non-neighbour stored frame against `query`,
    /// keeping those at or above `threshold`.
    pub fn score_all(
        &self,
        query: &Constellation,
        d: f64,
        threshold: f64,
        neighbor_exclusion: u32,
    ) -> Vec<(FrameId, f64)> {
        self.frames
            .iter()
            .filter(|c| !c.id.is_neighbor(&query.id, neighbor_exclusion))
            .map(|c| (c.id, pair_score(query, c, d).score))
            .filter(|&(_, s)| s >= threshold)
            .collect()
    }

    pub fn handle_full_query(
        &self,
        msg: &FullQueryMsg,
        d: f64,
        threshold: f64,
        neighbor_exclusion: u32,
    ) -> ScoreResponseMsg {
        let query = msg.to_constellation();
        ScoreResponseMsg {
            scores: self
                .score_all(&query, d, threshold, neighbor_exclusion)
                .into_iter()
                .map(|(id, s)| (id, quantize_score(s)))
                .collect(),
        }
    }
}

/// State held by one robot: the partials of its label shard and its own
/// recorded constellations. Handlers run one at a time per robot.
#[derive(Clone, Debug)]
pub struct RobotNode {
    pub id: u8,
    pub shard: LabelSet,
    pub partials: PartialStore,
    pub constellations: ConstellationStore,
}

impl RobotNode {
    pub fn new(id: u8, asg: &LabelAssignment) -> Self {
        Self {
            id,
            shard: asg.shard(id),
            partials: PartialStore::new(),
            constellations: ConstellationStore::new(),
        }
    }

    /// True when every label of `msg` belongs to this robot's shard.
    pub fn owns(&self, msg: &PartialQueryMsg) -> bool {
        msg.entries.iter().all(|(l, _)| self.shard.contains(*l))
    }
}
