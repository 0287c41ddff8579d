//! Toxicity scoring of utterances and corpus-level toxicity audits.

mod audit;
mod perspective;
mod stub;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::corpus::short_hash;
use crate::generation::BackendError;

pub use audit::{audit_corpus, AttributeMax, AuditOptions, DialogueMax, ToxicityAudit, UtteranceScore};
pub use perspective::{parse_perspective_response, perspective_request_body, PerspectiveConfig, PerspectiveScorer};
pub use stub::StubScorer;

/// Attribute names in [`ToxicityScores::values`] order.
pub const ATTRIBUTES: [&str; 6] = [
    "toxicity",
    "severe_toxicity",
    "identity_attack",
    "insult",
    "profanity",
    "threat",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ToxicityScores {
    pub toxicity: f64,
    pub severe_toxicity: f64,
    pub identity_attack: f64,
    pub insult: f64,
    pub profanity: f64,
    pub threat: f64,
}

impl ToxicityScores {
    /// Values in [`ATTRIBUTES`] order, each in [0, 1].
    pub fn new(values: [f64; 6]) -> Result<Self, SafetyError> {
        if let Some(i) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(SafetyError::Service {
                message: format!("{} score {} is outside [0, 1]", ATTRIBUTES[i], values[i]),
                attempts: 0,
            });
        }
        let [toxicity, severe_toxicity, identity_attack, insult, profanity, threat] = values;
        Ok(Self { toxicity, severe_toxicity, identity_attack, insult, profanity, threat })
    }

    pub fn values(&self) -> [f64; 6] {
        [self.toxicity, self.severe_toxicity, self.identity_attack, self.insult, self.profanity, self.threat]
    }

    pub fn uniform(v: f64) -> Self {
        Self::new([v; 6]).expect("uniform score in range")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SafetyError {
    #[error("text is empty")]
    EmptyText,
    #[error("scoring service failed after {attempts} attempt(s): {message}")]
    Service { message: String, attempts: u32 },
    #[error("configuration: {0}")]
    Config(String),
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("progress file line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("dialogue {dialogue_id} turn {turn}: {source}")]
    At {
        dialogue_id: String,
        turn: usize,
        #[source]
        source: Box<SafetyError>,
    },
}

impl SafetyError {
    fn from_backend(e: BackendError, attempts: u32) -> Self {
        SafetyError::Service { message: e.to_string(), attempts }
    }
}

/// Something that scores one utterance. Implementations must be shareable
/// across the audit's worker threads.
pub trait ToxicityScorer: Send + Sync {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError>;
}

/// Scores by text hash so each distinct text is sent once.
pub struct CachedScorer<S> {
    inner: S,
    cache: RwLock<HashMap<String, ToxicityScores>>,
    hits: AtomicU64,
}

impl<S: ToxicityScorer> CachedScorer<S> {
    pub fn new(inner: S) -> Self {
        Self { inner, cache: RwLock::new(HashMap::new()), hits: AtomicU64::new(0) }
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn len(&self) -> usize {
        self.cache.read().unwrap_or_else(|p| p.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: ToxicityScorer> ToxicityScorer for CachedScorer<S> {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError> {
        let key = short_hash(text.as_bytes());
        if let Some(s) = self.cache.read().unwrap_or_else(|p| p.into_inner()).get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(*s);
        }
        let scores = self.inner.score(text)?;
        self.cache.write().unwrap_or_else(|p| p.into_inner()).insert(key, scores);
        Ok(scores)
    }
}

impl<T: ToxicityScorer + ?Sized> ToxicityScorer for &T {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError> {
        (**self).score(text)
    }
}

impl<T: ToxicityScorer + ?Sized> ToxicityScorer for Box<T> {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError> {
        (**self).score(text)
    }
}

/// Scores a single utterance, rejecting blank text.
pub fn score_utterance(text: &str, scorer: &dyn ToxicityScorer) -> Result<ToxicityScores, SafetyError> {
    if text.trim().is_empty() {
        return Err(SafetyError::EmptyText);
    }
    scorer.score(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counting(std::sync::atomic::AtomicUsize);

    impl ToxicityScorer for Counting {
        fn score(&self, _: &str) -> Result<ToxicityScores, SafetyError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Ok(ToxicityScores::uniform(0.1))
        }
    }

    #[test]
    fn cache_avoids_repeat_calls() {
        let cached = CachedScorer::new(Counting(Default::default()));
        for _ in 0..3 {
            cached.score("same text").unwrap();
        }
        cached.score("other").unwrap();
        assert_eq!(cached.inner().0.load(Ordering::SeqCst), 2);
        assert_eq!(cached.hits(), 2);
        assert_eq!(cached.len(), 2);
    }

    #[test]
    fn range_and_empty() {
        assert!(ToxicityScores::new([0.0, 0.0, 0.0, 0.0, 1.5, 0.0]).is_err());
        let stub = StubScorer::bundled();
        assert!(matches!(score_utterance("   ", &stub), Err(SafetyError::EmptyText)));
    }
}
