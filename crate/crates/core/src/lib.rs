//! Computational narrative analysis for longitudinal case-record corpora.
//!
//! The pipeline ingests timestamped casenotes, collates them per case,
//! anonymizes and tokenizes the text, fits an LDA topic model, follows topic
//! popularity across ten positional sections of each case ("life of a case")
//! for need-level cohorts, scores sentence sentiment, and measures
//! persona-to-persona power through directional verbs. A synthetic corpus
//! generator with a ground-truth manifest checks every stage end to end.

pub mod cli_report;
pub mod cohort_lifeline;
pub mod corpus;
pub mod defaults;
pub mod error;
pub mod persona_power;
pub mod sentiment;
pub mod synth_oracle;
pub mod topic_engine;

pub use error::{Error, Result};
