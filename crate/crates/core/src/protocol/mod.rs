//! Label sharding, wire messages and the per-robot query handlers.

pub mod assignment;
pub mod codec;
pub mod node;

pub use assignment::{assign_labels, AssignmentError, LabelAssignment};
pub use codec::{
    dequantize_score, quantize_constellation, quantize_score, CandidateResponseMsg, CodecError, FullQueryMsg,
    MessageKind, PartialQueryMsg, ScoreResponseMsg, Wire, WireMessage, WireObject,
};
pub use node::{select_full_query_targets, split_query, ConstellationStore, PartialStore, RobotNode, SplitQuery};
