//! Decentralized place recognition over 3D object constellations.
//!
//! A frame is reduced to a constellation: one labelled 3D point per detected
//! object. Robots find loop-closure candidates in two stages. First, a
//! sparse class-count histogram is split by label over the fleet, and each
//! shard owner answers with the frames whose partial histograms match best.
//! Then the full constellation goes to the robots named most often, which
//! score it geometrically against their own frames.
//!
//! - [`types`] and [`descriptor`]: data model and the histogram Jaccard index.
//! - [`matching`]: surroundings vectors, mutual-nearest association, pair score.
//! - [`protocol`]: label shards, byte-exact messages, per-robot handlers.
//! - [`simulator`]: centralized and decentralized fleet playback with byte accounting.
//! - [`eval`]: detection logs, synthetic worlds, ground truth, PR curves.

pub mod descriptor;
pub mod eval;
pub mod matching;
pub mod protocol;
pub mod simulator;
pub mod types;

pub use descriptor::{build_semantic_descriptor, jaccard, JaccardTerms, SemanticDescriptor};
pub use matching::{associate, common_labels, pair_score, surroundings_vector, MatchSet, PairScore};
pub use types::{Constellation, FrameId, Label, LabelSet, ObjectPoint};
