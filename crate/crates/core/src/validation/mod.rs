//! Triage of generated dialogues into Accept, NeedsReview and Reject.

mod dedup;
mod extract;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    Corpus, Dialogue, DialogueWarning, RawRecord, RawTurn, Scenario, Speaker, Strategy,
};

pub use dedup::{near_duplicate_score, stream_score, token_stream, DedupIndex};
pub use extract::extract_record;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationPolicy {
    pub min_turns: usize,
    pub dup_threshold: f64,
    pub max_correctable: usize,
}

impl Default for ValidationPolicy {
    fn default() -> Self {
        Self {
            min_turns: 6,
            dup_threshold: 0.8,
            max_correctable: 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("cannot read policy file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid policy: {0}")]
    Invalid(String),
}

impl ValidationPolicy {
    pub fn from_toml(text: &str) -> Result<Self, PolicyError> {
        let policy: Self = toml::from_str(text).map_err(|e| PolicyError::Invalid(e.to_string()))?;
        if !(0.0..=1.0).contains(&policy.dup_threshold) {
            return Err(PolicyError::Invalid("dup_threshold must lie in [0, 1]".into()));
        }
        if policy.min_turns < 2 {
            return Err(PolicyError::Invalid("min_turns must be at least 2".into()));
        }
        Ok(policy)
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|source| PolicyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

/// Ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    NeedsReview,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Severity {
    Correctable,
    Fatal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IssueCode {
    Unparseable,
    MalformedRecord,
    RoleError,
    EmptyText,
    MissingStrategy,
    UnknownStrategy,
    StrategyLabelVariant,
    SceneMismatch,
    ConsecutiveSpeaker,
    TooFewTurns,
    TooManyCorrections,
    NearDuplicate,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Location {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub turn: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
}

impl Location {
    fn turn(turn: usize, field: &str) -> Self {
        Self {
            turn: Some(turn),
            field: Some(field.into()),
        }
    }

    fn field(field: &str) -> Self {
        Self {
            turn: None,
            field: Some(field.into()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    pub severity: Severity,
    pub message: String,
    pub location: Location,
    /// Replacement value for correctable issues.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub suggestion: Option<String>,
}

impl Issue {
    fn fatal(code: IssueCode, message: impl Into<String>, location: Location) -> Self {
        Self {
            code,
            severity: Severity::Fatal,
            message: message.into(),
            location,
            suggestion: None,
        }
    }

    fn correctable(
        code: IssueCode,
        message: impl Into<String>,
        location: Location,
        suggestion: Option<String>,
    ) -> Self {
        Self {
            code,
            severity: Severity::Correctable,
            message: message.into(),
            location,
            suggestion,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub issues: Vec<Issue>,
    /// The dialogue with correctable labels canonicalized, when it could be built.
    pub parsed: Option<Dialogue>,
    pub duplicate_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_of: Option<String>,
}

impl ValidationReport {
    pub fn fatal_count(&self) -> usize {
        self.issues.iter().filter(|i| i.severity == Severity::Fatal).count()
    }

    pub fn correctable_count(&self) -> usize {
        self.issues.len() - self.fatal_count()
    }
}

/// The verdict implied by a list of issues.
pub fn verdict_for(issues: &[Issue]) -> Verdict {
    issues
        .iter()
        .map(|i| match i.severity {
            Severity::Fatal => Verdict::Reject,
            Severity::Correctable => Verdict::NeedsReview,
        })
        .max()
        .unwrap_or(Verdict::Accept)
}

/// Validator over a fixed corpus snapshot.
#[derive(Debug, Clone)]
pub struct Validator {
    policy: ValidationPolicy,
    index: DedupIndex,
}

impl Validator {
    pub fn new(corpus: &Corpus, policy: ValidationPolicy) -> Self {
        Self {
            index: DedupIndex::new(corpus.iter()),
            policy,
        }
    }

    pub fn policy(&self) -> &ValidationPolicy {
        &self.policy
    }

    /// Adds a dialogue to the dedup snapshot.
    pub fn insert(&mut self, d: &Dialogue) {
        self.index.insert(d);
    }

    pub fn validate(&self, raw_text: &str, expected_scenario: &str) -> ValidationReport {
        let Some(value) = extract_record(raw_text) else {
            return finish(
                vec![Issue::fatal(
                    IssueCode::Unparseable,
                    "no JSON object found in generation",
                    Location::default(),
                )],
                None,
                0.0,
                None,
            );
        };
        self.validate_value(&value, expected_scenario)
    }

    /// Validates a record already parsed as JSON.
    pub fn validate_value(&self, value: &serde_json::Value, expected_scenario: &str) -> ValidationReport {
        match RawRecord::from_value(value) {
            Ok(record) => self.check_record(record, expected_scenario),
            Err(e) => finish(
                vec![Issue::fatal(IssueCode::MalformedRecord, e.to_string(), Location::default())],
                None,
                0.0,
                None,
            ),
        }
    }

    /// Re-validates an already structured dialogue, e.g. a reviewer's edit.
    pub fn validate_dialogue(&self, d: &Dialogue, expected_scenario: &str) -> ValidationReport {
        let record = RawRecord {
            id: Some(d.id.as_str().to_string()),
            scene: d.scene.clone(),
            description: d.description.clone(),
            turns: d
                .content
                .iter()
                .map(|u| RawTurn {
                    speaker: u.speaker,
                    strategy_label: u.strategy.map(|s| s.name().to_string()),
                    text: u.text.clone(),
                })
                .collect(),
            provenance: Some(d.provenance),
            iteration: Some(d.iteration),
        };
        let mut report = self.check_record(record, expected_scenario);
        if let Some(p) = report.parsed.as_mut() {
            p.id = d.id.clone();
        }
        report
    }

    /// Structural checks on a record, in turn order, then dedup.
    pub fn check_record(&self, record: RawRecord, expected_scenario: &str) -> ValidationReport {
        let policy = &self.policy;
        let mut issues = Vec::new();
        let mut record = record;

        if let Some(first) = record.turns.first() {
            if first.speaker != Speaker::User {
                issues.push(Issue::fatal(
                    IssueCode::RoleError,
                    format!("first utterance is from {}, not the User", first.speaker),
                    Location::turn(0, "speaker"),
                ));
            }
        }
        for (i, turn) in record.turns.iter_mut().enumerate() {
            if turn.text.trim().is_empty() {
                issues.push(Issue::fatal(
                    IssueCode::EmptyText,
                    format!("turn {i} has empty text"),
                    Location::turn(i, "text"),
                ));
            }
            if turn.speaker != Speaker::Ai {
                continue;
            }
            match turn.strategy_label.as_deref() {
                None => issues.push(Issue::fatal(
                    IssueCode::MissingStrategy,
                    format!("AI turn {i} has no strategy label"),
                    Location::turn(i, "AI Strategy"),
                )),
                Some(label) if Strategy::from_label(label).is_some() => {}
                Some(label) => match Strategy::from_label_fuzzy(label) {
                    Some(s) => {
                        issues.push(Issue::correctable(
                            IssueCode::StrategyLabelVariant,
                            format!("strategy label {label:?} is a variant of {:?}", s.name()),
                            Location::turn(i, "AI Strategy"),
                            Some(s.name().to_string()),
                        ));
                        turn.strategy_label = Some(s.name().to_string());
                    }
                    None => issues.push(Issue::fatal(
                        IssueCode::UnknownStrategy,
                        format!("unknown strategy label {label:?}"),
                        Location::turn(i, "AI Strategy"),
                    )),
                },
            }
        }
        if record.turns.len() < policy.min_turns {
            issues.push(Issue::fatal(
                IssueCode::TooFewTurns,
                format!("{} utterance(s); at least {} required", record.turns.len(), policy.min_turns),
                Location::field("content"),
            ));
        }
        if record.scene != expected_scenario {
            issues.push(Issue::correctable(
                IssueCode::SceneMismatch,
                format!("scene {:?} does not match requested {expected_scenario:?}", record.scene),
                Location::field("scene"),
                Some(expected_scenario.to_string()),
            ));
            // A pure spelling variant of the requested scenario is canonicalized.
            if Scenario::same_name(&record.scene, expected_scenario) {
                record.scene = expected_scenario.to_string();
            }
        }

        let parsed = record.into_dialogue(crate::corpus::LabelMatching::Exact).ok();
        if let Some(d) = &parsed {
            for w in d.warnings() {
                let DialogueWarning::ConsecutiveSpeaker { index, speaker } = w;
                issues.push(Issue::correctable(
                    IssueCode::ConsecutiveSpeaker,
                    format!("turn {index} repeats speaker {speaker}"),
                    Location::turn(index, "speaker"),
                    None,
                ));
            }
        }

        let correctable = issues.iter().filter(|i| i.severity == Severity::Correctable).count();
        if correctable > policy.max_correctable {
            issues.push(Issue::fatal(
                IssueCode::TooManyCorrections,
                format!("{correctable} correctable issues exceed the limit of {}", policy.max_correctable),
                Location::default(),
            ));
        }

        let (duplicate_of, duplicate_score) = match &parsed {
            Some(d) => match self.index.best_match(d) {
                Some((id, score)) => (Some(id), score),
                None => (None, 0.0),
            },
            None => (None, 0.0),
        };
        if duplicate_score >= policy.dup_threshold {
            let id = duplicate_of.as_ref().map(|i| i.as_str()).unwrap_or_default();
            issues.push(Issue::fatal(
                IssueCode::NearDuplicate,
                format!("near-duplicate of {id} (score {duplicate_score:.3})"),
                Location::default(),
            ));
        }
        finish(issues, parsed, duplicate_score, duplicate_of.map(|i| i.as_str().to_string()))
    }
}

fn finish(
    issues: Vec<Issue>,
    parsed: Option<Dialogue>,
    duplicate_score: f64,
    duplicate_of: Option<String>,
) -> ValidationReport {
    ValidationReport {
        verdict: verdict_for(&issues),
        issues,
        parsed,
        duplicate_score,
        duplicate_of,
    }
}

/// One-shot validation; builds a dedup index over `against` on every call,
/// so prefer [`Validator`] for batches.
pub fn validate(
    raw_text: &str,
    expected_scenario: &str,
    against: &Corpus,
    policy: &ValidationPolicy,
) -> ValidationReport {
    Validator::new(against, policy.clone()).validate(raw_text, expected_scenario)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{record_json, Utterance};

    fn six_turns(scene: &str, flavor: &str) -> Dialogue {
        Dialogue::new(
            scene,
            "Exams are coming up",
            vec![
                Utterance::user(format!("I'm overwhelmed by {flavor} right now")),
                Utterance::ai(Strategy::EmotionalValidation, "That sounds hard, it makes sense you feel this way."),
                Utterance::user(format!("Every day the {flavor} pile grows")),
                Utterance::ai(Strategy::Clarification, "What part weighs on you the most?"),
                Utterance::user("Probably the deadlines."),
                Utterance::ai(Strategy::SuggestOptions, "Could we try splitting them into smaller steps?"),
            ],
        )
    }

    fn policy() -> ValidationPolicy {
        ValidationPolicy::default()
    }

    #[test]
    fn clean_record_is_accepted() {
        let d = six_turns("Academic Stress", "coursework");
        let r = validate(&record_json(&d), "Academic Stress", &Corpus::new(), &policy());
        assert_eq!(r.verdict, Verdict::Accept);
        assert!(r.issues.is_empty());
        assert_eq!(r.parsed.unwrap().content, d.content);
    }

    #[test]
    fn case_variant_label_needs_review() {
        let text = record_json(&six_turns("Academic Stress", "coursework"))
            .replace("\"Emotional Validation\"", "\"Emotional validation\"");
        let r = validate(&text, "Academic Stress", &Corpus::new(), &policy());
        assert_eq!(r.verdict, Verdict::NeedsReview);
        assert_eq!(r.issues.len(), 1);
        assert_eq!(r.issues[0].code, IssueCode::StrategyLabelVariant);
        assert_eq!(r.issues[0].suggestion.as_deref(), Some("Emotional Validation"));
        assert_eq!(r.parsed.unwrap().content[1].strategy, Some(Strategy::EmotionalValidation));
    }

    #[test]
    fn exact_copy_is_rejected() {
        let d = six_turns("Academic Stress", "coursework");
        let corpus = Corpus::from_dialogues(vec![d.clone()]).unwrap();
        let r = validate(&record_json(&d), "Academic Stress", &corpus, &policy());
        assert_eq!(r.verdict, Verdict::Reject);
        assert_eq!(r.duplicate_score, 1.0);
        assert_eq!(r.duplicate_of.as_deref(), Some(d.id.as_str()));
    }

    #[test]
    fn fatal_cases() {
        let corpus = Corpus::new();
        let code = |text: &str| {
            let r = validate(text, "Academic Stress", &corpus, &policy());
            assert_eq!(r.verdict, Verdict::Reject);
            r.issues.iter().find(|i| i.severity == Severity::Fatal).unwrap().code
        };
        assert_eq!(code("I cannot help with that."), IssueCode::Unparseable);
        assert_eq!(code(r#"{"scene":"Academic Stress"}"#), IssueCode::MalformedRecord);
        let short = Dialogue::new(
            "Academic Stress",
            "",
            vec![Utterance::user("hi"), Utterance::ai(Strategy::Others, "hello")],
        );
        assert_eq!(code(&record_json(&short)), IssueCode::TooFewTurns);
        let unknown = record_json(&six_turns("Academic Stress", "x")).replace("Clarification", "Mind Reading");
        assert_eq!(code(&unknown), IssueCode::UnknownStrategy);
        let missing = record_json(&six_turns("Academic Stress", "x"))
            .replace(r#""AI Strategy":"Clarification","#, "");
        assert_eq!(code(&missing), IssueCode::MissingStrategy);
    }

    #[test]
    fn scene_and_speaker_issues() {
        let d = six_turns("academic stress", "coursework");
        let r = validate(&format!("```json\n{}\n```", record_json(&d)), "Academic Stress", &Corpus::new(), &policy());
        assert_eq!(r.verdict, Verdict::NeedsReview);
        assert_eq!(r.issues[0].code, IssueCode::SceneMismatch);
        assert_eq!(r.parsed.unwrap().scene, "Academic Stress");

        let mut d = six_turns("Academic Stress", "coursework");
        d.content.swap(4, 5);
        d.content.swap(3, 4);
        let r = validate(&record_json(&d), "Academic Stress", &Corpus::new(), &policy());
        assert_eq!(r.verdict, Verdict::NeedsReview);
        assert!(r.issues.iter().all(|i| i.code == IssueCode::ConsecutiveSpeaker));
    }

    #[test]
    fn too_many_corrections() {
        let text = record_json(&six_turns("Career Transitions", "coursework"))
            .replace("Emotional Validation", "emotional-validation")
            .replace("\"Clarification\"", "\"clarification\"")
            .replace("Suggest Options", "suggest options");
        let r = validate(&text, "Academic Stress", &Corpus::new(), &policy());
        assert_eq!(r.correctable_count(), 4);
        assert_eq!(r.verdict, Verdict::Reject);
        assert!(r.issues.iter().any(|i| i.code == IssueCode::TooManyCorrections));
    }

    #[test]
    fn policy_from_toml() {
        let p = ValidationPolicy::from_toml("min_turns = 4\ndup_threshold = 0.9").unwrap();
        assert_eq!(p.min_turns, 4);
        assert_eq!(p.max_correctable, 3);
        assert!(ValidationPolicy::from_toml("dup_threshold = 1.5").is_err());
        assert!(ValidationPolicy::from_toml("min_turn = 4").is_err());
    }
}
