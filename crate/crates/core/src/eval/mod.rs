//! Detection-log ingestion, synthetic worlds, ground truth and
//! precision-recall evaluation.

pub mod ground_truth;
pub mod io;
pub mod log;
pub mod matrix;
pub mod pr;
pub mod synth;

pub use ground_truth::{distance_score, ground_truth_from_poses, GroundTruth, DEFAULT_GT_CUTOFF};
pub use log::{load_detection_log, parse_detection_log, DetectionLog, DetectionRecord, LogError, LogHeader, Pose};
pub use matrix::{export_similarity_matrix, SimilarityMatrix};
pub use pr::{count_positives, evaluate, EvalParams, PrCurve, PrPoint, DEFAULT_GT_POSITIVE_THRESHOLD};
pub use synth::{generate_synthetic_world, SynthParams, SyntheticWorld};
