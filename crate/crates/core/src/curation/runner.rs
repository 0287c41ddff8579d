//! One pass of the loop: allocate, select seeds, generate, triage.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{record_json, short_hash, DialogueId, Provenance, ScenarioRegistry};
use crate::generation::{Gateway, GenerationError, GenerationRequest, Sampling, TokenUsage};
use crate::validation::{Severity, ValidationPolicy, Validator, Verdict};

use super::events::{EventKind, LOOP_ACTOR, VALIDATOR_ACTOR};
use super::pool::{select_seeds, SelectOptions};
use super::state::IterationState;
use super::CurationError;

/// Every scenario needs at least this many seeds of its own.
pub const MIN_SCENARIO_SEEDS: usize = 2;

#[derive(Debug, Clone)]
pub struct LoopConfig {
    pub seeds_per_prompt: usize,
    pub rng_seed: u64,
    pub select: SelectOptions,
    /// Generations requested per iteration, spread over scenarios.
    pub batch_size: usize,
    pub sampling: Sampling,
    pub policy: ValidationPolicy,
    /// Refuse scenarios missing from `registry`.
    pub strict_scenarios: bool,
    pub registry: ScenarioRegistry,
}

impl Default for LoopConfig {
    fn default() -> Self {
        Self {
            seeds_per_prompt: 2,
            rng_seed: 0,
            select: SelectOptions::default(),
            batch_size: 32,
            sampling: Sampling::default(),
            policy: ValidationPolicy::default(),
            strict_scenarios: false,
            registry: ScenarioRegistry::canonical(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub requested: u64,
    pub generated: u64,
    pub accepted: u64,
    pub queued: u64,
    pub rejected: u64,
    /// Requests the gateway gave up on.
    pub failed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ScenarioReport {
    fn failed_entirely(&self) -> bool {
        self.error.is_some() || (self.requested > 0 && self.generated == 0)
    }
}

/// `generated` counts completions that reached the validator, so
/// `generated == accepted + queued + rejected` always holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub iteration: u32,
    pub generated: u64,
    pub accepted: u64,
    pub queued: u64,
    pub rejected: u64,
    pub failed: u64,
    pub usage: TokenUsage,
    pub scenarios: Vec<ScenarioReport>,
}

/// Splits `budget` over scenarios by smooth weighted round-robin with the
/// remaining quota as weight; nobody gets more than its remaining quota.
pub fn allocate(remaining: &BTreeMap<String, u64>, budget: u64) -> BTreeMap<String, u64> {
    let names: Vec<&String> = remaining.keys().filter(|k| remaining[*k] > 0).collect();
    let weights: Vec<i128> = names.iter().map(|n| remaining[*n] as i128).collect();
    let mut current = vec![0i128; names.len()];
    let mut given = vec![0u64; names.len()];
    let total: u64 = weights.iter().map(|&w| w as u64).sum();
    for _ in 0..budget.min(total) {
        let active_weight: i128 = (0..names.len())
            .filter(|&i| given[i] < remaining[names[i]])
            .map(|i| weights[i])
            .sum();
        let mut best = None;
        for i in 0..names.len() {
            if given[i] >= remaining[names[i]] {
                continue;
            }
            current[i] += weights[i];
            if best.is_none_or(|b: usize| current[i] > current[b]) {
                best = Some(i);
            }
        }
        let b = best.expect("total bounds the loop");
        current[b] -= active_weight;
        given[b] += 1;
    }
    names
        .into_iter()
        .zip(given)
        .filter(|(_, g)| *g > 0)
        .map(|(n, g)| (n.clone(), g))
        .collect()
}

fn scenario_rng_seed(base: u64, iteration: u32, scenario: &str) -> u64 {
    let h = short_hash(format!("{base}:{iteration}:{scenario}").as_bytes());
    u64::from_str_radix(&h, 16).expect("short_hash is 16 hex digits")
}

/// Runs one iteration over every scenario with remaining quota.
///
/// Accepted dialogues are promoted at once, needs-review ones are queued
/// and rejected ones only leave audit entries. Dedup runs against the
/// corpus as it was when the iteration started. A failing scenario is
/// reported and skipped; the call errors only when all of them fail. The
/// iteration counter advances in every case.
pub fn run_iteration(
    state: &mut IterationState,
    gateway: &Gateway,
    cfg: &LoopConfig,
) -> Result<IterationReport, CurationError> {
    if cfg.seeds_per_prompt == 0 {
        return Err(CurationError::Config("seeds_per_prompt must be positive".into()));
    }
    let iteration = state.iteration();
    let remaining: BTreeMap<String, u64> = state
        .targets()
        .keys()
        .map(|s| (s.clone(), state.remaining(s)))
        .collect();
    let plan = allocate(&remaining, cfg.batch_size as u64);
    let validator = Validator::new(state.corpus(), cfg.policy.clone());
    let mut report = IterationReport { iteration, ..Default::default() };

    for (scenario, count) in plan {
        let mut sr = ScenarioReport { scenario: scenario.clone(), requested: count, ..Default::default() };
        match prepare(state, cfg, iteration, &scenario, count) {
            Err(e) => {
                log::warn!("iteration {iteration}: skipping {scenario:?}: {e}");
                sr.error = Some(e.to_string());
            }
            Ok(request) => match gateway.generate(&request) {
                Err(e) => sr.error = Some(e.to_string()),
                Ok(batch) => {
                    report.usage.input += batch.usage().input;
                    report.usage.output += batch.usage().output;
                    for item in batch.items {
                        match item.result {
                            Ok(raw) => triage(state, &validator, iteration, &scenario, &raw.request_id, &raw.raw_text, &mut sr)?,
                            Err(err) => {
                                sr.failed += 1;
                                state.emit(
                                    LOOP_ACTOR,
                                    None,
                                    Some(item.request_id),
                                    EventKind::GenerationFailed {
                                        scenario: scenario.clone(),
                                        iteration,
                                        error: err.to_string(),
                                    },
                                )?;
                            }
                        }
                    }
                }
            },
        }
        report.generated += sr.generated;
        report.accepted += sr.accepted;
        report.queued += sr.queued;
        report.rejected += sr.rejected;
        report.failed += sr.failed;
        report.scenarios.push(sr);
    }

    state.emit(LOOP_ACTOR, None, None, EventKind::IterationCompleted { report: report.clone() })?;
    if !report.scenarios.is_empty() && report.scenarios.iter().all(ScenarioReport::failed_entirely) {
        return Err(CurationError::AllScenariosFailed { report: Box::new(report) });
    }
    Ok(report)
}

fn prepare(
    state: &IterationState,
    cfg: &LoopConfig,
    iteration: u32,
    scenario: &str,
    count: u64,
) -> Result<GenerationRequest, CurationError> {
    if cfg.strict_scenarios && !cfg.registry.contains(scenario) {
        return Err(GenerationError::UnknownScenario(scenario.to_string()).into());
    }
    let own = state.pool().scenario_len(scenario);
    if own < MIN_SCENARIO_SEEDS {
        return Err(CurationError::InsufficientSeeds {
            scenario: scenario.to_string(),
            needed: MIN_SCENARIO_SEEDS,
            available: own,
        });
    }
    let seeds = select_seeds(
        state.pool(),
        state.corpus(),
        scenario,
        cfg.seeds_per_prompt,
        scenario_rng_seed(cfg.rng_seed, iteration, scenario),
        cfg.select,
    )?;
    Ok(GenerationRequest {
        scenario: scenario.to_string(),
        seeds,
        count: count as usize,
        sampling: cfg.sampling,
        id_prefix: format!("it{iteration}-"),
    })
}

fn triage(
    state: &mut IterationState,
    validator: &Validator,
    iteration: u32,
    scenario: &str,
    request_id: &str,
    raw_text: &str,
    sr: &mut ScenarioReport,
) -> Result<(), CurationError> {
    let report = validator.validate(raw_text, scenario);
    let dialogue = report.parsed.clone().and_then(|mut d| {
        d.provenance = Provenance::Generated;
        d.iteration = iteration;
        let base = format!("g-{}", short_hash(format!("{}\n{request_id}", record_json(&d)).as_bytes()));
        d.id = DialogueId::new(base.clone());
        let mut n = 1;
        while state.record(&d.id).is_some() || state.corpus().contains(&d.id) {
            d.id = DialogueId::new(format!("{base}-{n}"));
            n += 1;
        }
        d.check_invariants().is_ok().then_some(d)
    });
    // Without a usable dialogue there is nothing to accept or queue.
    let verdict = if dialogue.is_none() { Verdict::Reject } else { report.verdict };
    let id = dialogue.as_ref().map(|d| d.id.clone());
    state.emit(
        LOOP_ACTOR,
        id.clone(),
        Some(request_id.to_string()),
        EventKind::Generated {
            scenario: scenario.to_string(),
            iteration,
            verdict,
            issues: report.issues.clone(),
            duplicate_score: report.duplicate_score,
            dialogue,
        },
    )?;
    sr.generated += 1;
    match (verdict, id) {
        (Verdict::Accept, Some(id)) => {
            state.emit(
                VALIDATOR_ACTOR,
                Some(id.clone()),
                None,
                EventKind::Approved { edited: None, reason: None, ratings: None },
            )?;
            state.promote(&id, VALIDATOR_ACTOR)?;
            sr.accepted += 1;
        }
        (Verdict::NeedsReview, Some(id)) => {
            state.emit(LOOP_ACTOR, Some(id), None, EventKind::Queued)?;
            sr.queued += 1;
        }
        (_, id) => {
            let codes: Vec<String> = report
                .issues
                .iter()
                .filter(|i| i.severity == Severity::Fatal)
                .map(|i| format!("{:?}", i.code))
                .collect();
            let reason = if codes.is_empty() { "rejected".to_string() } else { codes.join(", ") };
            state.emit(VALIDATOR_ACTOR, id, None, EventKind::Rejected { reason: Some(reason), ratings: None })?;
            sr.rejected += 1;
        }
    }
    Ok(())
}
