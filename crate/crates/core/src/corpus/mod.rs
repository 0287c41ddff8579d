//! Dialogue data model, registries and the on-disk record format.

mod dialogue;
pub mod format;
pub mod scenario;
pub mod strategy;

pub use dialogue::{
    Corpus, Dialogue, DialogueId, DialogueWarning, Provenance, Speaker, Utterance,
};
pub(crate) use dialogue::short_hash;
pub(crate) use format::write_atomic;
pub use format::{
    corpus_to_string, load_corpus, load_corpus_with, parse_corpus_text, parse_dialogue,
    parse_dialogue_with, record_json, save_corpus, serialize_dialogue, LabelMatching, LineError,
    LoadOptions, LoadedCorpus, RawRecord, RawTurn,
};
pub use scenario::{Scenario, ScenarioRegistry};
pub use strategy::{Strategy, StrategyInfo, STRATEGY_COUNT};

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("malformed record: {0}")]
    MalformedRecord(String),
    #[error("unknown strategy label {label:?} at turn {turn}")]
    UnknownStrategy { label: String, turn: usize },
    #[error("first utterance must come from the User, found {found}")]
    RoleError { found: Speaker },
    #[error("invariant violation: {0}")]
    InvariantViolation(String),
    #[error("duplicate dialogue id {0}")]
    DuplicateId(String),
    #[error("{failed} of {total} records failed to parse")]
    TooManyErrors {
        failed: usize,
        total: usize,
        errors: Vec<LineError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CorpusError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CorpusError::MalformedRecord(_) => "MalformedRecord",
            CorpusError::UnknownStrategy { .. } => "UnknownStrategy",
            CorpusError::RoleError { .. } => "RoleError",
            CorpusError::InvariantViolation(_) => "InvariantViolation",
            CorpusError::DuplicateId(_) => "DuplicateId",
            CorpusError::TooManyErrors { .. } => "TooManyErrors",
            CorpusError::Io { .. } => "Io",
        }
    }
}
