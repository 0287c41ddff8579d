//! The extendable curation loop: seed pool, quotas, triage, human review
//! and the persistent audit log.

mod controller;
pub mod events;
pub mod pool;
pub mod quota;
pub mod review;
pub mod runner;
pub mod state;
pub mod store;

use std::path::Path;

pub use controller::{ControllerHandle, LoopController, StateView};
pub use events::{Event, EventKind, LOOP_ACTOR, VALIDATOR_ACTOR};
pub use pool::{select_seeds, SeedEntry, SeedOrigin, SeedPool, SelectOptions};
pub use quota::{QuotaConfig, ScenarioQuota};
pub use review::{
    apply_decision, review_stats, DecisionError, DecisionOutcome, QualityRatings, ReviewAction,
    ReviewDecision, ReviewStats, RATING_DIMENSIONS,
};
pub use runner::{run_iteration, IterationReport, LoopConfig, ScenarioReport};
pub use state::{Counters, DialogueRecord, DialogueStatus, IterationState, RatingEntry};
pub use store::{read_events, EventLog, StateDir};

use crate::generation::GenerationError;

#[derive(Debug, thiserror::Error)]
pub enum CurationError {
    #[error("scenario {scenario:?} has {available} eligible seed(s), {needed} needed")]
    InsufficientSeeds {
        scenario: String,
        needed: usize,
        available: usize,
    },
    #[error("unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("dialogue {id} is {status:?}, not Approved")]
    NotApproved { id: String, status: DialogueStatus },
    #[error("event {seq}: {message}")]
    InvalidEvent { seq: u64, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error("corrupt state: {0}")]
    Corrupt(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("every scenario failed in iteration {}", report.iteration)]
    AllScenariosFailed { report: Box<IterationReport> },
    #[error("loop controller has shut down")]
    Stopped,
}

impl CurationError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        CurationError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            CurationError::InsufficientSeeds { .. } => "InsufficientSeeds",
            CurationError::UnknownDialogue(_) => "UnknownDialogue",
            CurationError::NotApproved { .. } => "NotApproved",
            CurationError::InvalidEvent { .. } => "InvalidEvent",
            CurationError::Config(_) => "Config",
            CurationError::Corrupt(_) => "Corrupt",
            CurationError::Io { .. } => "Io",
            CurationError::Generation(_) => "Generation",
            CurationError::AllScenariosFailed { .. } => "AllScenariosFailed",
            CurationError::Stopped => "Stopped",
        }
    }
}
