//! Deterministic fleet playback.
//!
//! Frames from all robots are replayed in one global order (round-robin by
//! frame index). The centralized run scores every frame against every earlier
//! one; the decentralized run pushes each frame through the two-stage
//! protocol, encoding and decoding every message and charging its size to a
//! [`BandwidthLedger`].

mod ledger;
mod report;

use std::fmt;

use thiserror::Error;

pub use ledger::{BandwidthLedger, LedgerEntry, Traffic};
pub use report::{bandwidth_report, BandwidthReport, OPAQUE_DESCRIPTOR_BYTES, REFERENCE_MEAN_QUERY_BYTES};

use crate::descriptor::SemanticDescriptor;
use crate::matching::{pair_score, DEFAULT_MATCH_THRESHOLD};
use crate::protocol::{
    assign_labels, dequantize_score, quantize_constellation, quantize_score, select_full_query_targets, split_query,
    AssignmentError, CodecError, FullQueryMsg, RobotNode, Wire,
};
use crate::types::{Constellation, FrameId, DEFAULT_NUM_LABELS, MAX_LABELS};

pub const DEFAULT_N_RET: usize = 4;
pub const DEFAULT_N_FQ: usize = 4;
pub const DEFAULT_SCORE_THRESHOLD: f64 = 0.25;
/// Same-robot frames closer than this never form a loop closure
/// (12 s of video at ~16.7 fps).
pub const DEFAULT_NEIGHBOR_EXCLUSION: u32 = 200;
pub const DEFAULT_NUM_ROBOTS: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct FleetConfig {
    pub num_robots: usize,
    /// Candidates returned per partial query.
    pub n_ret: usize,
    /// Robots receiving the full constellation.
    pub n_fq: usize,
    /// Association threshold in meters.
    pub match_threshold: f64,
    /// Scores below this are not reported.
    pub score_threshold: f64,
    pub neighbor_exclusion: u32,
    pub num_labels: usize,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            num_robots: DEFAULT_NUM_ROBOTS,
            n_ret: DEFAULT_N_RET,
            n_fq: DEFAULT_N_FQ,
            match_threshold: DEFAULT_MATCH_THRESHOLD,
            score_threshold: DEFAULT_SCORE_THRESHOLD,
            neighbor_exclusion: DEFAULT_NEIGHBOR_EXCLUSION,
            num_labels: DEFAULT_NUM_LABELS,
        }
    }
}

impl FleetConfig {
    pub fn with_robots(num_robots: usize) -> Self {
        Self { num_robots, ..Self::default() }
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.num_robots == 0 || self.num_robots > MAX_LABELS {
            return Err(SimError::Config(format!("fleet size {} not in 1..=256", self.num_robots)));
        }
        if self.match_threshold.is_nan() || self.match_threshold <= 0.0 {
            return Err(SimError::Config(format!("match threshold {} must be positive", self.match_threshold)));
        }
        if self.num_labels > MAX_LABELS {
            return Err(SimError::Assignment(AssignmentError::TooManyLabels(self.num_labels)));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error("frame {frame} belongs to robot {} but the fleet has {num_robots} robots", frame.robot)]
    RobotOutOfRange { frame: FrameId, num_robots: usize },
    #[error("frame {frame} does not follow frame {previous} of the same robot")]
    FrameOrder { frame: FrameId, previous: FrameId },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Centralized,
    Decentralized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Centralized => "centralized",
            Mode::Decentralized => "decentralized",
        })
    }
}

/// A reported loop-closure candidate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityRecord {
    /// The later frame, whose query produced the record.
    pub query: FrameId,
    /// The earlier frame it was compared against.
    pub matched: FrameId,
    pub score: f64,
    pub mode: Mode,
}

impl SimilarityRecord {
    /// The frame pair, smaller id first.
    pub fn pair(&self) -> (FrameId, FrameId) {
        if self.query <= self.matched {
            (self.query, self.matched)
        } else {
            (self.matched, self.query)
        }
    }

    /// The record with its score snapped to the one-byte wire grid.
    pub fn quantized(&self) -> Self {
        Self { score: dequantize_score(quantize_score(self.score)), ..*self }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOutput {
    pub records: Vec<SimilarityRecord>,
    pub ledger: BandwidthLedger,
    /// Number of full constellation comparisons performed.
    pub pairs_examined: usize,
}

/// How to cut a single sequence into per-robot sub-trajectories.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitStrategy {
    /// Consecutive blocks of near-equal length.
    Contiguous,
    /// Frame `i` goes to robot `i % num_robots`.
    RoundRobin,
}

/// Distributes `sequence` over `num_robots` robots. Frame indexes are kept,
/// robot indexes rewritten.
pub fn split_stream(sequence: &[Constellation], num_robots: usize, strategy: SplitStrategy) -> Vec<Vec<Constellation>> {
    let num_robots = num_robots.max(1);
    let mut streams = vec![Vec::new(); num_robots];
    let base = sequence.len() / num_robots;
    let extra = sequence.len() % num_robots;
    let block_of = |i: usize| {
        // first `extra` blocks hold base + 1 frames
        let big = extra * (base + 1);
        if i < big {
            i / (base + 1)
        } else {
            extra + (i - big) / base.max(1)
        }
    };
    for (i, c) in sequence.iter().enumerate() {
        let robot = match strategy {
            SplitStrategy::Contiguous => block_of(i),
            SplitStrategy::RoundRobin => i % num_robots,
        };
        let mut c = c.clone();
        c.id.robot = robot as u8;
        streams[robot].push(c);
    }
    streams
}

/// All frames in global arrival order, after checking robot ids and
/// per-robot frame order.
pub fn arrival_order(streams: &[Vec<Constellation>], num_robots: usize) -> Result<Vec<&Constellation>, SimError> {
    let mut all = Vec::new();
    let mut last: Vec<Option<FrameId>> = vec![None; num_robots];
    for stream in streams {
        for c in stream {
            let r = c.id.robot as usize;
            if r >= num_robots {
                return Err(SimError::RobotOutOfRange { frame: c.id, num_robots });
            }
            if let Some(prev) = last[r] {
                if prev.frame >= c.id.frame {
                    return Err(SimError::FrameOrder { frame: c.id, previous: prev });
                }
            }
            last[r] = Some(c.id);
            all.push(c);
        }
    }
    all.sort_by_key(|c| c.id.arrival_key());
    Ok(all)
}

/// Scores every frame against all earlier, non-neighbouring frames.
///
/// The ledger holds what a naive scheme would cost: every constellation
/// broadcast in full to each other robot.
pub fn run_centralized(config: &FleetConfig, streams: &[Vec<Constellation>]) -> Result<RunOutput, SimError> {
    config.validate()?;
    let order = arrival_order(streams, config.num_robots)?;
    let mut out = RunOutput::default();
    for (i, &c) in order.iter().enumerate() {
        for &prev in &order[..i] {
            if prev.id.is_neighbor(&c.id, config.neighbor_exclusion) {
                continue;
            }
            out.pairs_examined += 1;
            let score = pair_score(c, prev, config.match_threshold).score;
            if score >= config.score_threshold {
                out.records.push(SimilarityRecord { query: c.id, matched: prev.id, score, mode: Mode::Centralized });
            }
        }
        let size = FullQueryMsg::from_constellation(c)?.wire_size();
        for r in 0..config.num_robots as u8 {
            if r != c.id.robot {
                out.ledger.record(LedgerEntry { query: c.id, kind: Traffic::Broadcast, from: c.id.robot, to: r, bytes: size });
            }
        }
    }
    Ok(out)
}

fn transmit<M: Wire>(ledger: &mut BandwidthLedger, query: FrameId, from: u8, to: u8, msg: &M) -> Result<M, CodecError> {
    let bytes = msg.encode();
    ledger.record(LedgerEntry { query, kind: Traffic::Message(M::KIND), from, to, bytes: bytes.len() });
    M::decode(&bytes)
}

/// Runs the two-stage decentralized protocol over the fleet's streams.
///
/// Each robot records its own constellations in wire-quantized form, so
/// scores are computed between quantized constellations on both sides.
pub fn run_decentralized(config: &FleetConfig, streams: &[Vec<Constellation>]) -> Result<RunOutput, SimError> {
    config.validate()?;
    let asg = assign_labels(config.num_robots, config.num_labels)?;
    let order = arrival_order(streams, config.num_robots)?;
    let mut nodes: Vec<RobotNode> = (0..config.num_robots).map(|r| RobotNode::new(r as u8, &asg)).collect();
    let mut out = RunOutput::default();
    let excl = config.neighbor_exclusion;

    for raw in order {
        let c = quantize_constellation(raw)?;
        let q = c.id.robot;
        let ledger = &mut out.ledger;

        // semantic stage
        let split = split_query(c.id, &SemanticDescriptor::from_constellation(&c), &asg);
        let mut responses = Vec::with_capacity(split.remote.len() + 1);
        if let Some(local) = &split.local {
            responses.push(nodes[q as usize].partials.handle_partial_query(local, config.n_ret, excl));
        }
        for (&r, msg) in &split.remote {
            let delivered = transmit(ledger, c.id, q, r, msg)?;
            let node = &mut nodes[r as usize];
            debug_assert!(node.owns(&delivered));
            let resp = node.partials.handle_partial_query(&delivered, config.n_ret, excl);
            responses.push(transmit(ledger, c.id, r, q, &resp)?);
        }

        // geometric stage
        let targets = select_full_query_targets(&responses, config.n_fq);
        if !targets.is_empty() {
            let full = FullQueryMsg::from_constellation(&c)?;
            for t in targets {
                let store = &nodes[t as usize].constellations;
                let reply = if t == q {
                    store.handle_full_query(&full, config.match_threshold, config.score_threshold, excl)
                } else {
                    let delivered = transmit(ledger, c.id, q, t, &full)?;
                    let reply = store.handle_full_query(&delivered, config.match_threshold, config.score_threshold, excl);
                    transmit(ledger, c.id, t, q, &reply)?
                };
                out.pairs_examined += store.frames().iter().filter(|s| !s.id.is_neighbor(&c.id, excl)).count();
                out.records.extend(reply.scores.into_iter().map(|(id, s)| SimilarityRecord {
                    query: c.id,
                    matched: id,
                    score: dequantize_score(s),
                    mode: Mode::Decentralized,
                }));
            }
        }
        nodes[q as usize].constellations.record(c);
    }
    Ok(out)
}

/// Streams with every position snapped to the wire grid.
pub fn quantize_streams(streams: &[Vec<Constellation>]) -> Result<Vec<Vec<Constellation>>, CodecError> {
    streams
        .iter()
        .map(|s| s.iter().map(quantize_constellation).collect())
        .collect()
}
