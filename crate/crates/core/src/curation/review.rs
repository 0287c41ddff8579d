//! Human review decisions, quality ratings and review statistics.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{category_counts, fleiss_kappa, Kappa};
use crate::corpus::{DialogueId, Provenance};
use crate::validation::{Severity, ValidationReport, Validator, Verdict};

use super::events::{EventKind, VALIDATOR_ACTOR};
use super::state::{DialogueStatus, IterationState};
use super::CurationError;

pub const RATING_DIMENSIONS: [&str; 5] =
    ["informativeness", "understanding", "helpfulness", "consistency", "coherence"];
pub const RATING_LEVELS: usize = 4;

/// Likert ratings, each 0 (worst) to 3 (best).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawRatings", deny_unknown_fields)]
pub struct QualityRatings {
    pub informativeness: u8,
    pub understanding: u8,
    pub helpfulness: u8,
    pub consistency: u8,
    pub coherence: u8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRatings {
    informativeness: u8,
    understanding: u8,
    helpfulness: u8,
    consistency: u8,
    coherence: u8,
}

impl TryFrom<RawRatings> for QualityRatings {
    type Error = String;

    fn try_from(r: RawRatings) -> Result<Self, String> {
        QualityRatings::new([r.informativeness, r.understanding, r.helpfulness, r.consistency, r.coherence])
    }
}

impl QualityRatings {
    /// Values in [`RATING_DIMENSIONS`] order.
    pub fn new(values: [u8; 5]) -> Result<Self, String> {
        if let Some(i) = values.iter().position(|&v| v as usize >= RATING_LEVELS) {
            return Err(format!("{} must be between 0 and 3, got {}", RATING_DIMENSIONS[i], values[i]));
        }
        let [informativeness, understanding, helpfulness, consistency, coherence] = values;
        Ok(Self { informativeness, understanding, helpfulness, consistency, coherence })
    }

    pub fn values(&self) -> [u8; 5] {
        [self.informativeness, self.understanding, self.helpfulness, self.consistency, self.coherence]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReviewAction {
    Approve,
    Reject,
    ApproveWithEdits,
    /// Ratings only; allowed on any known dialogue, pending or not.
    Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewDecision {
    /// Optional in request bodies where the id is in the path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dialogue_id: Option<DialogueId>,
    pub action: ReviewAction,
    /// Edited record in the corpus line format; required for `ApproveWithEdits`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edited: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratings: Option<QualityRatings>,
    pub reviewer: String,
    /// Client clock, informational. The audit log records server time.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecisionOutcome {
    pub dialogue_id: DialogueId,
    pub status: DialogueStatus,
    pub promoted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<ValidationReport>,
}

#[derive(Debug, thiserror::Error)]
pub enum DecisionError {
    #[error("unknown dialogue {0}")]
    NotFound(String),
    #[error("dialogue {id} was already decided ({status:?})")]
    AlreadyDecided { id: String, status: DialogueStatus },
    #[error("dialogue fails validation")]
    Invalid(Box<ValidationReport>),
    #[error("bad decision: {0}")]
    BadRequest(String),
    #[error(transparent)]
    State(#[from] CurationError),
}

/// Applies one review decision. Approvals re-validate against `validator`:
/// a plain approval needs no fatal issue, an edited one needs a clean Accept.
pub fn apply_decision(
    state: &mut IterationState,
    validator: &Validator,
    id: &DialogueId,
    decision: &ReviewDecision,
) -> Result<DecisionOutcome, DecisionError> {
    let reviewer = decision.reviewer.trim();
    if reviewer.is_empty() {
        return Err(DecisionError::BadRequest("reviewer must be non-empty".into()));
    }
    if reviewer == VALIDATOR_ACTOR {
        return Err(DecisionError::BadRequest(format!("reviewer name {VALIDATOR_ACTOR:?} is reserved")));
    }
    if let Some(body_id) = &decision.dialogue_id {
        if body_id != id {
            return Err(DecisionError::BadRequest("dialogue_id does not match the path".into()));
        }
    }
    let rec = state.record(id).ok_or_else(|| DecisionError::NotFound(id.to_string()))?.clone();
    let outcome = |status, promoted, report| DecisionOutcome {
        dialogue_id: id.clone(),
        status,
        promoted,
        report,
    };

    if decision.action == ReviewAction::Rate {
        let ratings = decision
            .ratings
            .ok_or_else(|| DecisionError::BadRequest("Rate requires ratings".into()))?;
        state.emit(reviewer, Some(id.clone()), None, EventKind::Rated { ratings })?;
        return Ok(outcome(rec.status, false, None));
    }
    if rec.status != DialogueStatus::Pending {
        return Err(DecisionError::AlreadyDecided { id: id.to_string(), status: rec.status });
    }

    match decision.action {
        ReviewAction::Reject => {
            state.emit(
                reviewer,
                Some(id.clone()),
                None,
                EventKind::Rejected { reason: decision.reason.clone(), ratings: decision.ratings },
            )?;
            Ok(outcome(DialogueStatus::Rejected, false, None))
        }
        ReviewAction::Approve => {
            let report = validator.validate_dialogue(&rec.dialogue, &rec.scenario);
            if report.issues.iter().any(|i| i.severity == Severity::Fatal) {
                return Err(DecisionError::Invalid(Box::new(report)));
            }
            state.emit(
                reviewer,
                Some(id.clone()),
                None,
                EventKind::Approved { edited: None, reason: decision.reason.clone(), ratings: decision.ratings },
            )?;
            state.promote(id, reviewer)?;
            Ok(outcome(DialogueStatus::Promoted, true, Some(report)))
        }
        ReviewAction::ApproveWithEdits => {
            let edited = decision
                .edited
                .as_ref()
                .ok_or_else(|| DecisionError::BadRequest("ApproveWithEdits requires `edited`".into()))?;
            let mut report = validator.validate_value(edited, &rec.scenario);
            if report.verdict != Verdict::Accept {
                return Err(DecisionError::Invalid(Box::new(report)));
            }
            let mut dialogue = report.parsed.clone().expect("accepted reports carry a dialogue");
            dialogue.id = id.clone();
            dialogue.provenance = Provenance::Edited;
            dialogue.iteration = rec.dialogue.iteration;
            report.parsed = Some(dialogue.clone());
            state.emit(
                reviewer,
                Some(id.clone()),
                None,
                EventKind::Approved {
                    edited: Some(dialogue),
                    reason: decision.reason.clone(),
                    ratings: decision.ratings,
                },
            )?;
            state.promote(id, reviewer)?;
            Ok(outcome(DialogueStatus::Promoted, true, Some(report)))
        }
        ReviewAction::Rate => unreachable!("handled above"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReviewStats {
    pub pending: u64,
    pub enqueued: u64,
    pub approved: u64,
    pub approved_with_edits: u64,
    pub rejected: u64,
    pub decisions: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edit_rate: Option<f64>,
    pub auto_accepted: u64,
    pub auto_rejected: u64,
    pub corpus_size: u64,
    pub seed_pool_size: u64,
    pub rating_count: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_ratings: Option<BTreeMap<String, f64>>,
    /// Fleiss' kappa per dimension over dialogues rated by several reviewers.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_items: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_raters: Option<u64>,
}

/// Review dashboard numbers. Approved counts include edited approvals.
///
/// Kappa needs the same rater count on every item, so it is computed over
/// the dialogues sharing the most common count (ties go to more raters).
/// A reviewer's latest rating of a dialogue replaces earlier ones.
pub fn review_stats(state: &IterationState) -> ReviewStats {
    let c = state.counters();
    let approved = c.approved + c.approved_with_edits;
    let decisions = approved + c.rejected;

    let mut latest: BTreeMap<(&DialogueId, &str), [u8; 5]> = BTreeMap::new();
    for r in state.ratings() {
        latest.insert((&r.dialogue_id, r.reviewer.as_str()), r.ratings.values());
    }
    let mean_ratings = (!latest.is_empty()).then(|| {
        RATING_DIMENSIONS
            .iter()
            .enumerate()
            .map(|(d, name)| {
                let sum: u64 = latest.values().map(|v| v[d] as u64).sum();
                (name.to_string(), sum as f64 / latest.len() as f64)
            })
            .collect()
    });

    let mut per_item: BTreeMap<&DialogueId, Vec<[u8; 5]>> = BTreeMap::new();
    for ((id, _), v) in &latest {
        per_item.entry(id).or_default().push(*v);
    }
    per_item.retain(|_, v| v.len() >= 2);
    let mut by_count: HashMap<usize, usize> = HashMap::new();
    for v in per_item.values() {
        *by_count.entry(v.len()).or_insert(0) += 1;
    }
    let modal = by_count.into_iter().max_by_key(|&(raters, items)| (items, raters)).map(|(r, _)| r);

    let (mut kappa, mut kappa_items, mut kappa_raters) = (None, None, None);
    if let Some(raters) = modal {
        let items: Vec<&Vec<[u8; 5]>> = per_item.values().filter(|v| v.len() == raters).collect();
        let mut values = BTreeMap::new();
        for (d, name) in RATING_DIMENSIONS.iter().enumerate() {
            let lists: Vec<Vec<u8>> = items.iter().map(|v| v.iter().map(|r| r[d]).collect()).collect();
            if let Ok(Kappa::Value(k)) = fleiss_kappa(&category_counts(&lists, RATING_LEVELS)) {
                values.insert(name.to_string(), k);
            }
        }
        if !values.is_empty() {
            kappa = Some(values);
            kappa_items = Some(items.len() as u64);
            kappa_raters = Some(raters as u64);
        }
    }

    ReviewStats {
        pending: state.pending_len() as u64,
        enqueued: c.enqueued,
        approved,
        approved_with_edits: c.approved_with_edits,
        rejected: c.rejected,
        decisions,
        edit_rate: (decisions > 0).then(|| c.approved_with_edits as f64 / decisions as f64),
        auto_accepted: c.auto_accepted,
        auto_rejected: c.auto_rejected,
        corpus_size: state.corpus().len() as u64,
        seed_pool_size: state.pool().len() as u64,
        rating_count: latest.len() as u64,
        mean_ratings,
        kappa,
        kappa_items,
        kappa_raters,
    }
}
