//! Harness for paired personality-knowledge / behavior-tendency questionnaires.
//!
//! The pipeline runs in stages: a bilingual [`corpus`] of statement/scenario
//! pairs is administered to respondent backends ([`admin`]), raw replies are
//! screened for unreasonable response patterns ([`validation`]), valid runs are
//! aggregated into 1-7 score profiles ([`scoring`]), profiles are checked for
//! logical consistency and split-half reliability ([`reliability`]), and
//! knowledge/behavior score vectors are compared with congruence metrics and
//! permutation significance tests ([`metrics`]). [`pipeline`] wires the stages
//! together and [`report`] renders the results as CSV/Markdown/JSON tables.

pub mod admin;
pub mod corpus;
pub mod metrics;
pub mod pipeline;
pub mod reliability;
pub mod report;
pub mod scoring;
pub mod validation;

pub use corpus::{
    AlignedAction, Corpus, Dimension, Direction, ItemId, Language, PairedItem, Scale, ScaleLayout,
    Scenario, Statement,
};
