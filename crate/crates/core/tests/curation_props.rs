mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::sync::Arc;
use std::time::Duration;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::random_dialogue;
use supportloop_core::corpus::format::record_json;
use supportloop_core::curation::{
    apply_decision, run_iteration, DecisionError, DialogueStatus, EventKind, IterationState, LoopConfig,
    QuotaConfig, ReviewAction, ReviewDecision, VALIDATOR_ACTOR,
};
use supportloop_core::generation::{BackendError, ChatBackend, ChatCall, ChatReply, Gateway, GatewayConfig};
use supportloop_core::net::RetryPolicy;
use supportloop_core::validation::{Severity, Validator};
use supportloop_core::{Provenance, ValidationPolicy};

const SCENES: [&str; 3] = ["Academic Stress", "Breakups or Divorce", "Job Crisis"];

/// Answers each call with a dialogue for the requested scene; the call's
/// hash decides whether it is clean, needs review, is too short or is junk.
struct Scripted {
    salt: u64,
}

impl ChatBackend for Scripted {
    fn complete(&self, call: &ChatCall) -> Result<ChatReply, BackendError> {
        let mut h = DefaultHasher::new();
        (self.salt, &call.request_id).hash(&mut h);
        let key = h.finish();
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let tag = (key % 1_000_000) as usize + 1000;
        let text = match key % 10 {
            0 => "sorry, I cannot help with that {".to_string(),
            1 | 2 => record_json(&random_dialogue(&mut rng, &call.scenario.to_lowercase(), 8, tag)),
            3 => record_json(&random_dialogue(&mut rng, &call.scenario, 3, tag)),
            _ => record_json(&random_dialogue(&mut rng, &call.scenario, 8, tag)),
        };
        Ok(ChatReply { text, usage: None })
    }
}

fn gateway(salt: u64) -> Gateway {
    let cfg = GatewayConfig {
        max_concurrency: 3,
        rate_limit_per_minute: 1e9,
        retry: RetryPolicy { max_attempts: 1, base_backoff: Duration::ZERO, max_backoff: Duration::ZERO },
        api_key_env: None,
        ..GatewayConfig::default()
    };
    Gateway::new(Arc::new(Scripted { salt }), cfg).unwrap()
}

fn seeded_state(targets: &[u64]) -> IterationState {
    let mut state = IterationState::new();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (i, scene) in SCENES.iter().enumerate() {
        for k in 0..3 {
            state.import_seed(random_dialogue(&mut rng, scene, 8, i * 10 + k), "test").unwrap();
        }
    }
    let quotas = QuotaConfig {
        targets: SCENES.iter().zip(targets).map(|(s, &t)| (s.to_string(), t)).collect(),
    };
    state.set_targets(&quotas);
    state
}

fn decision(action: ReviewAction) -> ReviewDecision {
    ReviewDecision {
        dialogue_id: None,
        action,
        edited: None,
        reason: None,
        ratings: None,
        reviewer: "alice".into(),
        timestamp: None,
    }
}

fn check_invariants(state: &IterationState) -> Result<(), TestCaseError> {
    let records = state.records();

    // Corpus membership is seeds plus promoted generations.
    let promoted: BTreeSet<_> = records
        .iter()
        .filter(|(_, r)| r.status == DialogueStatus::Promoted)
        .map(|(id, _)| id.clone())
        .collect();
    let members: BTreeSet<_> = state.corpus().ids().cloned().collect();
    let seeds: BTreeSet<_> = state
        .corpus()
        .iter()
        .filter(|d| d.provenance == Provenance::Seed)
        .map(|d| d.id.clone())
        .collect();
    prop_assert_eq!(&members, &seeds.union(&promoted).cloned().collect());

    for (scene, &target) in state.targets() {
        prop_assert!(state.produced(scene) + state.pending_for(scene) <= target);
    }

    // Nothing promoted carries a fatal issue.
    let validator = Validator::new(&Default::default(), ValidationPolicy::default());
    for id in &promoted {
        let rec = &records[id];
        let report = validator.validate_dialogue(&rec.dialogue, &rec.scenario);
        prop_assert!(report.issues.iter().all(|i| i.severity != Severity::Fatal), "{:?}", report.issues);
    }

    // Queue conservation.
    let c = state.counters();
    let reviewed = c.approved + c.approved_with_edits + c.rejected;
    prop_assert_eq!(c.enqueued, state.pending_len() as u64 + reviewed);
    let pending = records.values().filter(|r| r.status == DialogueStatus::Pending).count();
    prop_assert_eq!(pending, state.pending_len());

    // At most one terminal decision and one promotion per dialogue.
    let mut terminal: HashMap<_, u32> = HashMap::new();
    let mut promotions: HashMap<_, u32> = HashMap::new();
    for e in state.audit().iter().filter(|e| e.dialogue_id.is_some()) {
        match &e.kind {
            EventKind::Approved { .. } | EventKind::Rejected { .. } => {
                *terminal.entry(e.dialogue_id.clone()).or_default() += 1
            }
            EventKind::Promoted => *promotions.entry(e.dialogue_id.clone()).or_default() += 1,
            _ => {}
        }
    }
    prop_assert!(terminal.values().all(|&n| n == 1));
    prop_assert!(promotions.values().all(|&n| n == 1));

    let replayed = IterationState::replay(state.audit().to_vec()).unwrap();
    prop_assert!(replayed.same_contents(state));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn loop_invariants_hold(
        salt in any::<u64>(),
        targets in prop::collection::vec(1u64..10, 3),
        batch in 1usize..12,
        choices in prop::collection::vec(0u8..4, 40),
    ) {
        let mut state = seeded_state(&targets);
        let gw = gateway(salt);
        let cfg = LoopConfig { batch_size: batch, rng_seed: salt, ..LoopConfig::default() };
        let mut choices = choices.into_iter().cycle();
        check_invariants(&state)?;

        for _ in 0..3 {
            let before = (state.corpus().len(), state.pool().len());
            let report = match run_iteration(&mut state, &gw, &cfg) {
                Ok(r) => r,
                Err(supportloop_core::curation::CurationError::AllScenariosFailed { report }) => *report,
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            };
            prop_assert_eq!(report.generated, report.accepted + report.queued + report.rejected);
            for s in &report.scenarios {
                prop_assert_eq!(s.generated, s.accepted + s.queued + s.rejected);
                prop_assert_eq!(s.requested, s.generated + s.failed);
            }
            prop_assert!(state.corpus().len() >= before.0);
            prop_assert!(state.pool().len() >= before.1);
            check_invariants(&state)?;

            let pending: Vec<_> = state.pending().map(|r| r.dialogue.id.clone()).collect();
            for id in pending {
                let before = (state.corpus().len(), state.pool().len());
                let action = match choices.next().unwrap() {
                    0 => ReviewAction::Reject,
                    1 => continue,
                    _ => ReviewAction::Approve,
                };
                let validator = Validator::new(state.corpus(), ValidationPolicy::default());
                let first = apply_decision(&mut state, &validator, &id, &decision(action));
                if first.is_ok() {
                    let again = apply_decision(&mut state, &validator, &id, &decision(ReviewAction::Approve));
                    prop_assert!(matches!(again, Err(DecisionError::AlreadyDecided { .. })), "{:?}", again);
                }
                prop_assert!(state.corpus().len() >= before.0);
                prop_assert!(state.pool().len() >= before.1);
                check_invariants(&state)?;
            }
        }

        // The validator never records a human decision.
        let humans: BTreeMap<_, _> = state
            .records()
            .iter()
            .filter(|(_, r)| r.decided_by.as_deref().is_some_and(|a| a != VALIDATOR_ACTOR))
            .map(|(id, r)| (id.clone(), r.status))
            .collect();
        prop_assert!(humans.values().all(|s| matches!(s, DialogueStatus::Promoted | DialogueStatus::Rejected)));
    }
}
