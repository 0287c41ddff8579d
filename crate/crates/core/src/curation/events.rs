use serde::{Deserialize, Serialize};

use crate::corpus::{Dialogue, DialogueId};
use crate::validation::{Issue, Verdict};

use super::review::QualityRatings;
use super::runner::IterationReport;

/// Actor name used for decisions taken by the validator.
pub const VALIDATOR_ACTOR: &str = "validator";
/// Actor name used for loop bookkeeping.
pub const LOOP_ACTOR: &str = "loop";

/// One audit-log line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub seq: u64,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub actor: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialogue_id: Option<DialogueId>,
    /// Gateway request that produced the dialogue, for loop events.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub request_id: Option<String>,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum EventKind {
    /// A hand-written or imported seed entered the corpus and the pool.
    SeedImported { dialogue: Dialogue },
    /// A completion arrived and was triaged. `dialogue` is absent when the
    /// text could not be turned into a dialogue at all.
    Generated {
        scenario: String,
        iteration: u32,
        verdict: Verdict,
        issues: Vec<Issue>,
        duplicate_score: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dialogue: Option<Dialogue>,
    },
    /// The gateway gave up on a request.
    GenerationFailed {
        scenario: String,
        iteration: u32,
        error: String,
    },
    Queued,
    Approved {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edited: Option<Dialogue>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratings: Option<QualityRatings>,
    },
    Rejected {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ratings: Option<QualityRatings>,
    },
    /// Approved dialogue appended to the corpus and the seed pool.
    Promoted,
    /// Quality ratings outside of a queue decision.
    Rated { ratings: QualityRatings },
    IterationCompleted { report: IterationReport },
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::SeedImported { .. } => "SeedImported",
            EventKind::Generated { .. } => "Generated",
            EventKind::GenerationFailed { .. } => "GenerationFailed",
            EventKind::Queued => "Queued",
            EventKind::Approved { .. } => "Approved",
            EventKind::Rejected { .. } => "Rejected",
            EventKind::Promoted => "Promoted",
            EventKind::Rated { .. } => "Rated",
            EventKind::IterationCompleted { .. } => "IterationCompleted",
        }
    }
}

pub(crate) fn now_rfc3339() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
