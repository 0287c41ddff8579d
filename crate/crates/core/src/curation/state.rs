use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, DialogueId, Provenance};
use crate::validation::{Issue, Verdict};

use super::events::{now_rfc3339, Event, EventKind, VALIDATOR_ACTOR};
use super::pool::{SeedOrigin, SeedPool};
use super::quota::{QuotaConfig, ScenarioQuota};
use super::review::QualityRatings;
use super::store::EventLog;
use super::CurationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DialogueStatus {
    Generated,
    Pending,
    Approved,
    Rejected,
    Promoted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueRecord {
    pub dialogue: Dialogue,
    /// Scenario the dialogue was requested for, or its scene for imports.
    pub scenario: String,
    pub status: DialogueStatus,
    pub issues: Vec<Issue>,
    pub duplicate_score: f64,
    /// Sequence number of the `Queued` event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enqueued_seq: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decided_by: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingEntry {
    pub dialogue_id: DialogueId,
    pub reviewer: String,
    pub ratings: QualityRatings,
    pub seq: u64,
}

/// Counts of triage and review outcomes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub enqueued: u64,
    pub approved: u64,
    pub approved_with_edits: u64,
    pub rejected: u64,
    pub auto_accepted: u64,
    pub auto_rejected: u64,
}

/// Everything derived from the audit log except the corpus itself.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub(crate) struct Ledger {
    pub iteration: u32,
    pub next_seq: u64,
    pub pool: SeedPool,
    pub records: BTreeMap<DialogueId, Arc<DialogueRecord>>,
    pub pending: Vec<DialogueId>,
    pub ratings: Vec<RatingEntry>,
    pub counters: Counters,
    /// Generated dialogues promoted per scenario.
    pub produced: BTreeMap<String, u64>,
}

/// Loop state. Every mutation is an [`Event`]: it is checked, written to
/// the attached log (if any), applied and appended to the in-memory audit.
#[derive(Debug, Default)]
pub struct IterationState {
    pub(crate) ledger: Ledger,
    pub(crate) corpus: Corpus,
    targets: BTreeMap<String, u64>,
    audit: Vec<Event>,
    sink: Option<EventLog>,
}

impl IterationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn iteration(&self) -> u32 {
        self.ledger.iteration
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn pool(&self) -> &SeedPool {
        &self.ledger.pool
    }

    pub fn audit(&self) -> &[Event] {
        &self.audit
    }

    pub fn counters(&self) -> Counters {
        self.ledger.counters
    }

    pub fn ratings(&self) -> &[RatingEntry] {
        &self.ledger.ratings
    }

    pub fn record(&self, id: &DialogueId) -> Option<&Arc<DialogueRecord>> {
        self.ledger.records.get(id)
    }

    pub fn records(&self) -> &BTreeMap<DialogueId, Arc<DialogueRecord>> {
        &self.ledger.records
    }

    /// Pending records, oldest first.
    pub fn pending(&self) -> impl Iterator<Item = &Arc<DialogueRecord>> {
        self.ledger.pending.iter().map(|id| &self.ledger.records[id])
    }

    pub fn pending_len(&self) -> usize {
        self.ledger.pending.len()
    }

    pub fn set_targets(&mut self, quotas: &QuotaConfig) {
        self.targets = quotas.targets.clone();
    }

    pub fn targets(&self) -> &BTreeMap<String, u64> {
        &self.targets
    }

    pub fn produced(&self, scenario: &str) -> u64 {
        self.ledger.produced.get(scenario).copied().unwrap_or(0)
    }

    pub fn pending_for(&self, scenario: &str) -> u64 {
        self.pending().filter(|r| r.scenario == scenario).count() as u64
    }

    /// Target minus produced minus still-pending, floored at zero.
    pub fn remaining(&self, scenario: &str) -> u64 {
        let target = self.targets.get(scenario).copied().unwrap_or(0);
        target.saturating_sub(self.produced(scenario) + self.pending_for(scenario))
    }

    pub fn quotas(&self) -> Vec<ScenarioQuota> {
        self.targets
            .iter()
            .map(|(s, &t)| ScenarioQuota {
                scenario: s.clone(),
                target_count: t,
                produced: self.produced(s),
            })
            .collect()
    }

    pub(crate) fn attach_log(&mut self, log: EventLog) {
        self.sink = Some(log);
    }

    pub(crate) fn set_audit(&mut self, audit: Vec<Event>) {
        self.audit = audit;
    }

    /// Appends a new event.
    pub fn emit(
        &mut self,
        actor: &str,
        dialogue_id: Option<DialogueId>,
        request_id: Option<String>,
        kind: EventKind,
    ) -> Result<&Event, CurationError> {
        let event = Event {
            seq: self.ledger.next_seq,
            timestamp: now_rfc3339(),
            actor: actor.to_string(),
            dialogue_id,
            request_id,
            kind,
        };
        self.check(&event)?;
        if let Some(sink) = self.sink.as_mut() {
            sink.append(&event)?;
        }
        self.apply(&event);
        self.audit.push(event);
        Ok(self.audit.last().expect("just pushed"))
    }

    /// Rebuilds state from an audit log.
    pub fn replay<I: IntoIterator<Item = Event>>(events: I) -> Result<Self, CurationError> {
        let mut state = Self::new();
        for event in events {
            state.replay_one(event)?;
        }
        Ok(state)
    }

    pub(crate) fn replay_one(&mut self, event: Event) -> Result<(), CurationError> {
        self.check(&event)?;
        self.apply(&event);
        self.audit.push(event);
        Ok(())
    }

    fn invalid(event: &Event, message: impl Into<String>) -> CurationError {
        CurationError::InvalidEvent {
            seq: event.seq,
            message: format!("{}: {}", event.kind.name(), message.into()),
        }
    }

    fn existing(&self, event: &Event) -> Result<&DialogueRecord, CurationError> {
        let id = event
            .dialogue_id
            .as_ref()
            .ok_or_else(|| Self::invalid(event, "missing dialogue_id"))?;
        self.ledger
            .records
            .get(id)
            .map(Arc::as_ref)
            .ok_or_else(|| Self::invalid(event, format!("unknown dialogue {id}")))
    }

    fn check(&self, event: &Event) -> Result<(), CurationError> {
        if event.seq != self.ledger.next_seq {
            return Err(Self::invalid(
                event,
                format!("sequence {} out of order, expected {}", event.seq, self.ledger.next_seq),
            ));
        }
        let expect_status = |allowed: &[DialogueStatus]| -> Result<(), CurationError> {
            let rec = self.existing(event)?;
            if allowed.contains(&rec.status) {
                Ok(())
            } else {
                Err(Self::invalid(event, format!("dialogue is {:?}", rec.status)))
            }
        };
        match &event.kind {
            EventKind::SeedImported { dialogue } | EventKind::Generated { dialogue: Some(dialogue), .. } => {
                if event.dialogue_id.as_ref() != Some(&dialogue.id) {
                    return Err(Self::invalid(event, "dialogue_id does not match dialogue"));
                }
                dialogue
                    .check_invariants()
                    .map_err(|e| Self::invalid(event, e.to_string()))?;
                if self.ledger.records.contains_key(&dialogue.id) || self.corpus.contains(&dialogue.id) {
                    return Err(Self::invalid(event, format!("dialogue {} already known", dialogue.id)));
                }
                Ok(())
            }
            EventKind::Generated { dialogue: None, .. }
            | EventKind::GenerationFailed { .. }
            | EventKind::IterationCompleted { .. } => Ok(()),
            EventKind::Queued => expect_status(&[DialogueStatus::Generated]),
            EventKind::Approved { edited, .. } => {
                expect_status(&[DialogueStatus::Generated, DialogueStatus::Pending])?;
                if let Some(d) = edited {
                    d.check_invariants().map_err(|e| Self::invalid(event, e.to_string()))?;
                    if event.dialogue_id.as_ref() != Some(&d.id) {
                        return Err(Self::invalid(event, "edited dialogue changes the id"));
                    }
                }
                Ok(())
            }
            EventKind::Rejected { .. } if event.dialogue_id.is_none() => Ok(()),
            EventKind::Rejected { .. } => {
                expect_status(&[DialogueStatus::Generated, DialogueStatus::Pending])
            }
            EventKind::Promoted => expect_status(&[DialogueStatus::Approved]),
            EventKind::Rated { .. } => self.existing(event).map(|_| ()),
        }
    }

    /// Applies a checked event.
    fn apply(&mut self, event: &Event) {
        self.ledger.next_seq = event.seq + 1;
        let ledger = &mut self.ledger;
        let id = event.dialogue_id.clone();
        let by_validator = event.actor == VALIDATOR_ACTOR;
        match &event.kind {
            EventKind::SeedImported { dialogue } => {
                ledger.pool.add(&dialogue.scene, dialogue.id.clone(), SeedOrigin::Manual);
                ledger.records.insert(
                    dialogue.id.clone(),
                    Arc::new(DialogueRecord {
                        dialogue: dialogue.clone(),
                        scenario: dialogue.scene.clone(),
                        status: DialogueStatus::Promoted,
                        issues: Vec::new(),
                        duplicate_score: 0.0,
                        enqueued_seq: None,
                        decided_by: Some(event.actor.clone()),
                    }),
                );
                self.corpus.push(dialogue.clone()).expect("checked: id is new");
            }
            EventKind::Generated {
                scenario,
                issues,
                duplicate_score,
                dialogue,
                verdict,
                ..
            } => {
                if *verdict == Verdict::Reject {
                    ledger.counters.auto_rejected += 1;
                }
                if let Some(d) = dialogue {
                    ledger.records.insert(
                        d.id.clone(),
                        Arc::new(DialogueRecord {
                            dialogue: d.clone(),
                            scenario: scenario.clone(),
                            status: DialogueStatus::Generated,
                            issues: issues.clone(),
                            duplicate_score: *duplicate_score,
                            enqueued_seq: None,
                            decided_by: None,
                        }),
                    );
                }
            }
            EventKind::GenerationFailed { .. } => {}
            EventKind::Queued => {
                let id = id.expect("checked");
                let rec = Arc::make_mut(ledger.records.get_mut(&id).expect("checked"));
                rec.status = DialogueStatus::Pending;
                rec.enqueued_seq = Some(event.seq);
                ledger.pending.push(id);
                ledger.counters.enqueued += 1;
            }
            EventKind::Approved { edited, ratings, .. } => {
                let id = id.expect("checked");
                let rec = Arc::make_mut(ledger.records.get_mut(&id).expect("checked"));
                rec.status = DialogueStatus::Approved;
                rec.decided_by = Some(event.actor.clone());
                if let Some(d) = edited {
                    rec.dialogue = d.clone();
                }
                ledger.pending.retain(|p| p != &id);
                match (by_validator, edited.is_some()) {
                    (true, _) => ledger.counters.auto_accepted += 1,
                    (false, true) => ledger.counters.approved_with_edits += 1,
                    (false, false) => ledger.counters.approved += 1,
                }
                if let Some(r) = ratings {
                    ledger.ratings.push(RatingEntry {
                        dialogue_id: id,
                        reviewer: event.actor.clone(),
                        ratings: *r,
                        seq: event.seq,
                    });
                }
            }
            EventKind::Rejected { ratings, .. } => {
                let Some(id) = id else { return };
                let rec = Arc::make_mut(ledger.records.get_mut(&id).expect("checked"));
                rec.status = DialogueStatus::Rejected;
                rec.decided_by = Some(event.actor.clone());
                ledger.pending.retain(|p| p != &id);
                if !by_validator {
                    ledger.counters.rejected += 1;
                }
                if let Some(r) = ratings {
                    ledger.ratings.push(RatingEntry {
                        dialogue_id: id,
                        reviewer: event.actor.clone(),
                        ratings: *r,
                        seq: event.seq,
                    });
                }
            }
            EventKind::Promoted => {
                let id = id.expect("checked");
                let rec = Arc::make_mut(ledger.records.get_mut(&id).expect("checked"));
                rec.status = DialogueStatus::Promoted;
                ledger.pool.add(&rec.scenario, id.clone(), SeedOrigin::Promoted);
                if rec.dialogue.provenance != Provenance::Seed {
                    *ledger.produced.entry(rec.scenario.clone()).or_insert(0) += 1;
                }
                self.corpus
                    .push(rec.dialogue.clone())
                    .expect("checked: approved dialogues are not in the corpus");
            }
            EventKind::Rated { ratings } => {
                ledger.ratings.push(RatingEntry {
                    dialogue_id: id.expect("checked"),
                    reviewer: event.actor.clone(),
                    ratings: *ratings,
                    seq: event.seq,
                });
            }
            EventKind::IterationCompleted { report } => {
                ledger.iteration = report.iteration + 1;
            }
        }
    }

    /// Adds a manual seed to the corpus and pool.
    pub fn import_seed(&mut self, mut dialogue: Dialogue, actor: &str) -> Result<(), CurationError> {
        dialogue.provenance = Provenance::Seed;
        let id = dialogue.id.clone();
        self.emit(actor, Some(id), None, EventKind::SeedImported { dialogue })?;
        Ok(())
    }

    /// Moves an approved dialogue into the corpus and the seed pool.
    /// Returns false when it was already promoted.
    pub fn promote(&mut self, id: &DialogueId, actor: &str) -> Result<bool, CurationError> {
        let rec = self
            .record(id)
            .ok_or_else(|| CurationError::UnknownDialogue(id.to_string()))?;
        match rec.status {
            DialogueStatus::Promoted => Ok(false),
            DialogueStatus::Approved => {
                self.emit(actor, Some(id.clone()), None, EventKind::Promoted)?;
                Ok(true)
            }
            status => Err(CurationError::NotApproved { id: id.to_string(), status }),
        }
    }

    /// Corpus membership, pool and ledger equality, ignoring the audit and
    /// any attached log.
    pub fn same_contents(&self, other: &Self) -> bool {
        self.ledger == other.ledger && self.corpus == other.corpus
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Strategy, Utterance};
    use crate::validation::Verdict;

    fn dialogue(tag: &str) -> Dialogue {
        Dialogue::new(
            "Career Transitions",
            tag,
            vec![Utterance::user(tag), Utterance::ai(Strategy::OfferHope, "It will get better.")],
        )
    }

    fn generated(state: &mut IterationState, d: &Dialogue) {
        state
            .emit(
                "loop",
                Some(d.id.clone()),
                Some("r".into()),
                EventKind::Generated {
                    scenario: "Career Transitions".into(),
                    iteration: 0,
                    verdict: Verdict::Accept,
                    issues: vec![],
                    duplicate_score: 0.0,
                    dialogue: Some(d.clone()),
                },
            )
            .unwrap();
    }

    fn approve(state: &mut IterationState, d: &Dialogue) {
        state
            .emit(
                VALIDATOR_ACTOR,
                Some(d.id.clone()),
                None,
                EventKind::Approved { edited: None, reason: None, ratings: None },
            )
            .unwrap();
    }

    #[test]
    fn promote_grows_pool_once() {
        let mut state = IterationState::new();
        let d = dialogue("new job");
        generated(&mut state, &d);
        approve(&mut state, &d);
        assert_eq!(state.pool().scenario_len("Career Transitions"), 0);
        assert!(state.promote(&d.id, "loop").unwrap());
        assert_eq!(state.pool().scenario_len("Career Transitions"), 1);
        assert!(!state.promote(&d.id, "loop").unwrap());
        assert_eq!(state.pool().scenario_len("Career Transitions"), 1);
        assert_eq!(state.corpus().len(), 1);
        assert_eq!(state.produced("Career Transitions"), 1);
    }

    #[test]
    fn promote_errors() {
        let mut state = IterationState::new();
        let d = dialogue("rejected");
        generated(&mut state, &d);
        state
            .emit(VALIDATOR_ACTOR, Some(d.id.clone()), None, EventKind::Rejected { reason: None, ratings: None })
            .unwrap();
        assert!(matches!(state.promote(&d.id, "loop"), Err(CurationError::NotApproved { .. })));
        assert!(matches!(state.promote(&"nope".into(), "loop"), Err(CurationError::UnknownDialogue(_))));
    }

    #[test]
    fn replay_reconstructs() {
        let mut state = IterationState::new();
        state.import_seed(dialogue("seed one"), "curator").unwrap();
        let d = dialogue("generated");
        generated(&mut state, &d);
        state.emit("loop", Some(d.id.clone()), None, EventKind::Queued).unwrap();
        assert_eq!(state.pending_len(), 1);
        let replayed = IterationState::replay(state.audit().to_vec()).unwrap();
        assert!(replayed.same_contents(&state));
        assert_eq!(replayed.pending().next().unwrap().dialogue.id, d.id);
    }

    #[test]
    fn rejects_invalid_transitions() {
        let mut state = IterationState::new();
        let d = dialogue("x");
        let err = state.emit("loop", Some(d.id.clone()), None, EventKind::Promoted);
        assert!(matches!(err, Err(CurationError::InvalidEvent { .. })));
        assert!(state.audit().is_empty());
        state.import_seed(d.clone(), "curator").unwrap();
        assert!(state.import_seed(d, "curator").is_err());
    }
}
