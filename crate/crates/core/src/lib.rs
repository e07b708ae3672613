//! Slot-filling sequence construction, candidate snapping and exact-match
//! scoring for event-annotated tweet corpora.
//!
//! The pipeline has four stages, each usable on its own:
//!
//! * [`corpus`] parses and validates line-delimited tweet records and splits
//!   them into train/validation sets.
//! * [`seqgen`] turns every tweet into text-to-text examples of the form
//!   `context: … question: … choices: …`.
//! * [`editdist`] snaps free-form generated answers onto the closest
//!   candidate choice by length-normalized Levenshtein distance.
//! * [`metrics`] scores runs with exact-match precision/recall/F1 and
//!   compares raw and snapped runs.
//!
//! [`predict`] loads predictions from files or a remote generation service,
//! and [`cli`] wires the stages into the `slotforge` binary.
//!
//! ```
//! use slotforge::editdist::{transm, CaseMode};
//!
//! let candidates = ["author of the tweet", ". provide healthcare facilities", "not specified"];
//! let snap = transm("provide healthcare facilities", &candidates, CaseMode::Uncased).unwrap();
//! assert_eq!(snap.chosen, ". provide healthcare facilities");
//! assert_eq!(snap.distance, 2);
//! ```

pub mod cli;
pub mod corpus;
pub mod editdist;
pub mod metrics;
pub mod predict;
pub mod seqgen;

/// Joins multiple choices in a source and multiple answers in a target or
/// prediction.
pub const ANSWER_DELIMITER: &str = " ||| ";

pub use corpus::{parse_corpus, split_train_validation, validate_corpus, AnswerPolicy, Corpus, EventType};
pub use editdist::{levenshtein, normalized_distance, transm, CaseMode, SnapResult};
pub use metrics::{evaluate, underestimation, EvaluationReport, MatchCounts};
pub use predict::{PredictionKey, RawPrediction};
pub use seqgen::{build_all, render_source, Example, QuestionBank};
