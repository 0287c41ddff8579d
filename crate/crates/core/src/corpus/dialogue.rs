use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::strategy::Strategy;
use super::CorpusError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Speaker {
    User,
    #[serde(rename = "AI")]
    Ai,
}

impl Speaker {
    /// Record key used for this speaker's text.
    pub fn key(self) -> &'static str {
        match self {
            Speaker::User => "User",
            Speaker::Ai => "AI",
        }
    }
}

impl fmt::Display for Speaker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Utterance {
    pub speaker: Speaker,
    pub strategy: Option<Strategy>,
    pub text: String,
}

impl Utterance {
    pub fn user(text: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::User,
            strategy: None,
            text: text.into(),
        }
    }

    pub fn ai(strategy: Strategy, text: impl Into<String>) -> Self {
        Self {
            speaker: Speaker::Ai,
            strategy: Some(strategy),
            text: text.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Seed,
    #[default]
    Generated,
    Edited,
}

/// Opaque dialogue identifier.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DialogueId(String);

impl DialogueId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DialogueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DialogueId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

impl From<String> for DialogueId {
    fn from(s: String) -> Self {
        Self(s)
    }
}

/// Non-fatal structural observation about a dialogue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DialogueWarning {
    /// Turn `index` has the same speaker as the turn before it.
    ConsecutiveSpeaker { index: usize, speaker: Speaker },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dialogue {
    pub id: DialogueId,
    pub scene: String,
    pub description: String,
    pub content: Vec<Utterance>,
    pub provenance: Provenance,
    pub iteration: u32,
}

impl Dialogue {
    /// Builds a dialogue whose id is derived from its content.
    pub fn new(
        scene: impl Into<String>,
        description: impl Into<String>,
        content: Vec<Utterance>,
    ) -> Self {
        let mut d = Self {
            id: DialogueId::new(""),
            scene: scene.into(),
            description: description.into(),
            content,
            provenance: Provenance::default(),
            iteration: 0,
        };
        d.id = d.content_id();
        d
    }

    /// Number of utterances, both speakers.
    pub fn len(&self) -> usize {
        self.content.len()
    }

    pub fn is_empty(&self) -> bool {
        self.content.is_empty()
    }

    /// Strategies of the AI turns in turn order.
    pub fn ai_strategies(&self) -> impl Iterator<Item = Strategy> + '_ {
        self.content.iter().filter_map(|u| u.strategy)
    }

    pub fn ai_turn_count(&self) -> usize {
        self.content.iter().filter(|u| u.speaker == Speaker::Ai).count()
    }

    /// Identifier derived from scene, description and turns.
    pub fn content_id(&self) -> DialogueId {
        DialogueId(format!("d-{}", short_hash(super::format::record_json(self).as_bytes())))
    }

    pub fn check_invariants(&self) -> Result<(), CorpusError> {
        if self.id.as_str().is_empty() {
            return Err(CorpusError::InvariantViolation("empty dialogue id".into()));
        }
        if self.content.len() < 2 {
            return Err(CorpusError::InvariantViolation(format!(
                "dialogue has {} utterance(s); at least 2 required",
                self.content.len()
            )));
        }
        if self.content[0].speaker != Speaker::User {
            return Err(CorpusError::RoleError { found: self.content[0].speaker });
        }
        for (i, u) in self.content.iter().enumerate() {
            if u.text.trim().is_empty() {
                return Err(CorpusError::InvariantViolation(format!("turn {i} has empty text")));
            }
            match (u.speaker, u.strategy) {
                (Speaker::Ai, None) => {
                    return Err(CorpusError::InvariantViolation(format!(
                        "AI turn {i} has no strategy"
                    )))
                }
                (Speaker::User, Some(_)) => {
                    return Err(CorpusError::InvariantViolation(format!(
                        "User turn {i} carries a strategy"
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn warnings(&self) -> Vec<DialogueWarning> {
        self.content
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[0].speaker == w[1].speaker)
            .map(|(i, w)| DialogueWarning::ConsecutiveSpeaker {
                index: i + 1,
                speaker: w[1].speaker,
            })
            .collect()
    }
}

pub(crate) fn short_hash(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(bytes);
    hex::encode(&digest[..8])
}

/// Ordered dialogue collection with unique ids.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    dialogues: Vec<Dialogue>,
    index: HashMap<DialogueId, usize>,
    pub source_path: Option<PathBuf>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.dialogues == other.dialogues
    }
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_dialogues(dialogues: Vec<Dialogue>) -> Result<Self, CorpusError> {
        let mut corpus = Self::new();
        for d in dialogues {
            corpus.push(d)?;
        }
        Ok(corpus)
    }

    pub fn push(&mut self, dialogue: Dialogue) -> Result<(), CorpusError> {
        if self.index.contains_key(&dialogue.id) {
            return Err(CorpusError::DuplicateId(dialogue.id.to_string()));
        }
        self.index.insert(dialogue.id.clone(), self.dialogues.len());
        self.dialogues.push(dialogue);
        Ok(())
    }

    pub fn get(&self, id: &DialogueId) -> Option<&Dialogue> {
        self.index.get(id).map(|&i| &self.dialogues[i])
    }

    pub fn contains(&self, id: &DialogueId) -> bool {
        self.index.contains_key(id)
    }

    pub fn len(&self) -> usize {
        self.dialogues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dialogues.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Dialogue> {
        self.dialogues.iter()
    }

    pub fn dialogues(&self) -> &[Dialogue] {
        &self.dialogues
    }

    pub fn into_dialogues(self) -> Vec<Dialogue> {
        self.dialogues
    }

    pub fn ids(&self) -> impl Iterator<Item = &DialogueId> {
        self.dialogues.iter().map(|d| &d.id)
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a Dialogue;
    type IntoIter = std::slice::Iter<'a, Dialogue>;

    fn into_iter(self) -> Self::IntoIter {
        self.dialogues.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Dialogue {
        Dialogue::new(
            "Academic Stress",
            "A student before finals.",
            vec![
                Utterance::user("I'm overwhelmed"),
                Utterance::ai(Strategy::EmotionalValidation, "That sounds hard"),
            ],
        )
    }

    #[test]
    fn invariants_and_warnings() {
        let d = sample();
        d.check_invariants().unwrap();
        assert!(d.warnings().is_empty());

        let mut twice = d.clone();
        twice.content.push(Utterance::ai(Strategy::Affirmation, "You can do it"));
        assert_eq!(
            twice.warnings(),
            vec![DialogueWarning::ConsecutiveSpeaker { index: 2, speaker: Speaker::Ai }]
        );
        twice.check_invariants().unwrap();

        let mut ai_first = d.clone();
        ai_first.content.reverse();
        assert!(matches!(ai_first.check_invariants(), Err(CorpusError::RoleError { .. })));

        let mut short = d.clone();
        short.content.truncate(1);
        assert!(short.check_invariants().is_err());

        let mut unlabeled = d;
        unlabeled.content[1].strategy = None;
        assert!(unlabeled.check_invariants().is_err());
    }

    #[test]
    fn content_id_is_stable_and_content_sensitive() {
        let a = sample();
        let mut b = sample();
        assert_eq!(a.id, b.id);
        b.content[1].text.push('.');
        assert_ne!(a.id, b.content_id());
        assert!(a.id.as_str().starts_with("d-"));
    }

    #[test]
    fn corpus_rejects_duplicate_ids() {
        let mut c = Corpus::new();
        c.push(sample()).unwrap();
        assert!(matches!(c.push(sample()), Err(CorpusError::DuplicateId(_))));
        assert_eq!(c.len(), 1);
        assert!(c.contains(&sample().id));
    }
}
