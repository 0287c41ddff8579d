//! Single-writer owner of the loop state. Readers get immutable snapshots;
//! writes go through a command channel and are applied one at a time.

use std::collections::BTreeMap;
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Mutex, RwLock};
use std::thread::JoinHandle;

use crate::corpus::DialogueId;
use crate::generation::Gateway;
use crate::validation::Validator;

use super::quota::ScenarioQuota;
use super::review::{apply_decision, review_stats, DecisionError, DecisionOutcome, ReviewDecision, ReviewStats};
use super::runner::{run_iteration, IterationReport, LoopConfig};
use super::state::{DialogueRecord, IterationState};
use super::store::StateDir;
use super::CurationError;

/// Consistent read-only picture of the state after some command.
#[derive(Debug, Clone)]
pub struct StateView {
    pub iteration: u32,
    /// Oldest first.
    pub pending: Vec<Arc<DialogueRecord>>,
    pub records: BTreeMap<DialogueId, Arc<DialogueRecord>>,
    pub stats: ReviewStats,
    pub quotas: Vec<ScenarioQuota>,
}

impl StateView {
    fn of(state: &IterationState) -> Self {
        Self {
            iteration: state.iteration(),
            pending: state.pending().cloned().collect(),
            records: state.records().clone(),
            stats: review_stats(state),
            quotas: state.quotas(),
        }
    }
}

enum Command {
    Decide(DialogueId, ReviewDecision, Sender<Result<DecisionOutcome, DecisionError>>),
    RunIteration(Sender<Result<IterationReport, CurationError>>),
    Snapshot(Sender<Result<(), CurationError>>),
    Shutdown,
}

pub struct LoopController {
    state: IterationState,
    validator: Validator,
    gateway: Option<Arc<Gateway>>,
    config: LoopConfig,
    store: Option<StateDir>,
    view: Arc<RwLock<Arc<StateView>>>,
}

/// Cloneable client of a running [`LoopController`].
#[derive(Clone)]
pub struct ControllerHandle {
    tx: Sender<Command>,
    view: Arc<RwLock<Arc<StateView>>>,
    thread: Arc<Mutex<Option<JoinHandle<IterationState>>>>,
}

impl LoopController {
    /// Starts the controller thread. Without a gateway, iteration requests fail.
    pub fn spawn(
        state: IterationState,
        gateway: Option<Arc<Gateway>>,
        config: LoopConfig,
        store: Option<StateDir>,
    ) -> ControllerHandle {
        let view = Arc::new(RwLock::new(Arc::new(StateView::of(&state))));
        let controller = LoopController {
            validator: Validator::new(state.corpus(), config.policy.clone()),
            state,
            gateway,
            config,
            store,
            view: Arc::clone(&view),
        };
        let (tx, rx) = mpsc::channel();
        let thread = std::thread::Builder::new()
            .name("loop-controller".into())
            .spawn(move || controller.serve(rx))
            .expect("spawn controller thread");
        ControllerHandle {
            tx,
            view,
            thread: Arc::new(Mutex::new(Some(thread))),
        }
    }

    fn serve(mut self, rx: Receiver<Command>) -> IterationState {
        while let Ok(cmd) = rx.recv() {
            match cmd {
                Command::Decide(id, decision, reply) => {
                    let result = apply_decision(&mut self.state, &self.validator, &id, &decision);
                    if let Ok(out) = &result {
                        if out.promoted {
                            if let Some(d) = self.state.corpus().get(&id) {
                                self.validator.insert(d);
                            }
                        }
                    }
                    self.publish();
                    let _ = reply.send(result);
                }
                Command::RunIteration(reply) => {
                    let result = match &self.gateway {
                        None => Err(CurationError::Config("no gateway configured".into())),
                        Some(gw) => run_iteration(&mut self.state, gw, &self.config),
                    };
                    self.validator = Validator::new(self.state.corpus(), self.config.policy.clone());
                    let result = result.and_then(|r| self.snapshot().map(|_| r));
                    self.publish();
                    let _ = reply.send(result);
                }
                Command::Snapshot(reply) => {
                    let _ = reply.send(self.snapshot());
                }
                Command::Shutdown => break,
            }
        }
        if let Err(e) = self.snapshot() {
            log::error!("final snapshot failed: {e}");
        }
        self.state
    }

    fn snapshot(&self) -> Result<(), CurationError> {
        match &self.store {
            Some(store) => store.snapshot(&self.state),
            None => Ok(()),
        }
    }

    fn publish(&self) {
        let view = Arc::new(StateView::of(&self.state));
        *self.view.write().unwrap_or_else(|p| p.into_inner()) = view;
    }
}

impl ControllerHandle {
    pub fn view(&self) -> Arc<StateView> {
        Arc::clone(&self.view.read().unwrap_or_else(|p| p.into_inner()))
    }

    pub fn decide(&self, id: DialogueId, decision: ReviewDecision) -> Result<DecisionOutcome, DecisionError> {
        let (tx, rx) = mpsc::channel();
        self.tx
            .send(Command::Decide(id, decision, tx))
            .map_err(|_| DecisionError::State(CurationError::Stopped))?;
        rx.recv().map_err(|_| DecisionError::State(CurationError::Stopped))?
    }

    pub fn run_iteration(&self) -> Result<IterationReport, CurationError> {
        let (tx, rx) = mpsc::channel();
        self.tx.send(Command::RunIteration(tx)).map_err(|_| CurationError::Stopped)?;
        rx.recv().map_err(|_| CurationError::Stopped)?
    }

    pub fn snapshot(&self) -> Result<(), CurationError> {
        let (tx, rx) = mpsc::channel();
        self.tx.send(Command::Snapshot(tx)).map_err(|_| CurationError::Stopped)?;
        rx.recv().map_err(|_| CurationError::Stopped)?
    }

    /// Stops the controller, writes a final snapshot and returns the state.
    /// Only the first call on any clone gets the state.
    pub fn shutdown(&self) -> Option<IterationState> {
        let _ = self.tx.send(Command::Shutdown);
        let handle = self.thread.lock().unwrap_or_else(|p| p.into_inner()).take()?;
        handle.join().ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dialogue, Strategy, Utterance};
    use crate::curation::{EventKind, ReviewAction, LOOP_ACTOR};
    use crate::validation::Verdict;

    #[test]
    fn decisions_are_serialized_and_published() {
        let mut state = IterationState::new();
        let content = (0..6)
            .map(|i| {
                if i % 2 == 0 {
                    Utterance::user(format!("user line {i} about my week"))
                } else {
                    Utterance::ai(Strategy::Clarification, format!("Could you say more about point {i}?"))
                }
            })
            .collect();
        let d = Dialogue::new("Academic Stress", "queued one", content);
        state
            .emit(
                LOOP_ACTOR,
                Some(d.id.clone()),
                None,
                EventKind::Generated {
                    scenario: "Academic Stress".into(),
                    iteration: 0,
                    verdict: Verdict::NeedsReview,
                    issues: vec![],
                    duplicate_score: 0.0,
                    dialogue: Some(d.clone()),
                },
            )
            .unwrap();
        state.emit(LOOP_ACTOR, Some(d.id.clone()), None, EventKind::Queued).unwrap();

        let handle = LoopController::spawn(state, None, LoopConfig::default(), None);
        assert_eq!(handle.view().pending.len(), 1);
        let decision = ReviewDecision {
            dialogue_id: None,
            action: ReviewAction::Approve,
            edited: None,
            reason: None,
            ratings: None,
            reviewer: "alice".into(),
            timestamp: None,
        };
        let threads: Vec<_> = (0..4)
            .map(|_| {
                let h = handle.clone();
                let (id, dec) = (d.id.clone(), decision.clone());
                std::thread::spawn(move || h.decide(id, dec).is_ok())
            })
            .collect();
        let wins = threads.into_iter().map(|t| t.join().unwrap()).filter(|&ok| ok).count();
        assert_eq!(wins, 1);
        let view = handle.view();
        assert!(view.pending.is_empty());
        assert_eq!(view.stats.approved, 1);
        assert!(matches!(handle.run_iteration(), Err(CurationError::Config(_))));
        let state = handle.shutdown().unwrap();
        assert_eq!(state.corpus().len(), 1);
        assert!(handle.shutdown().is_none());
    }
}
