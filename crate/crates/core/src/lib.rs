//! Synthesis, curation and evaluation of strategy-annotated emotional
//! support dialogue corpora.
//!
//! The pipeline is a loop: pick seed dialogues for a scenario, render them
//! into the self-chat prompt, collect generations from a chat-completion
//! gateway, triage them with the validator, hand uncertain ones to human
//! reviewers and promote approved dialogues back into the seed pool.
//! Around it sit corpus analytics, automatic response metrics, a toxicity
//! audit and fine-tuning data export.

pub mod analysis;
pub mod corpus;
pub mod curation;
pub mod export;
pub mod generation;
pub mod metrics;
pub mod net;
pub mod safety;
pub mod text;
pub mod validation;

pub use corpus::{
    load_corpus, parse_dialogue, save_corpus, serialize_dialogue, Corpus, CorpusError, Dialogue,
    DialogueId, Provenance, Scenario, ScenarioRegistry, Speaker, Strategy, Utterance,
};
pub use text::{tokenize, TokenSeq};
pub use validation::{validate, ValidationPolicy, ValidationReport, Verdict};
