use std::collections::HashMap;

use crate::text::tokenize;

use super::{SafetyError, ToxicityScorer, ToxicityScores};

const BUNDLED_LEXICON: &str = include_str!("../../assets/toxicity_lexicon.txt");

/// Attributes a lexicon term can raise directly.
const LEXICON_ATTRIBUTES: [&str; 4] = ["identity_attack", "insult", "profanity", "threat"];

/// Deterministic offline scorer driven by a word lexicon.
///
/// Each attribute scores `1 - 0.6^hits`; toxicity combines the four direct
/// attributes as independent events and severe toxicity is its cube.
#[derive(Debug, Clone)]
pub struct StubScorer {
    terms: HashMap<String, Vec<usize>>,
}

impl StubScorer {
    pub fn bundled() -> Self {
        Self::from_lexicon(BUNDLED_LEXICON).expect("bundled lexicon parses")
    }

    /// Parses `<attribute> <term>` lines; `#` starts a comment.
    pub fn from_lexicon(text: &str) -> Result<Self, SafetyError> {
        let mut terms: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (attr, term) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| SafetyError::Corrupt { line: i + 1, message: "expected <attribute> <term>".into() })?;
            let idx = LEXICON_ATTRIBUTES
                .iter()
                .position(|a| *a == attr)
                .ok_or_else(|| SafetyError::Corrupt { line: i + 1, message: format!("unknown attribute {attr:?}") })?;
            for token in tokenize(term).tokens() {
                let entry = terms.entry(token.clone()).or_default();
                if !entry.contains(&idx) {
                    entry.push(idx);
                }
            }
        }
        Ok(Self { terms })
    }
}

impl ToxicityScorer for StubScorer {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError> {
        let mut hits = [0i32; 4];
        for token in tokenize(text).tokens() {
            for &a in self.terms.get(token).into_iter().flatten() {
                hits[a] += 1;
            }
        }
        let direct = hits.map(|h| 1.0 - 0.6f64.powi(h));
        let toxicity = 1.0 - direct.iter().map(|s| 1.0 - s).product::<f64>();
        let [identity_attack, insult, profanity, threat] = direct;
        Ok(ToxicityScores {
            toxicity,
            severe_toxicity: toxicity.powi(3),
            identity_attack,
            insult,
            profanity,
            threat,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_term_raises_profanity() {
        let stub = StubScorer::bundled();
        let with = stub.score("this damn exam is ruining my week").unwrap();
        let without = stub.score("this exam is ruining my week").unwrap();
        assert!(with.profanity > without.profanity);
        assert!(with.toxicity > without.toxicity);
        assert_eq!(without, ToxicityScores::default());
        assert!(with.values().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn bad_lexicon_lines() {
        assert!(StubScorer::from_lexicon("profanity\n").is_err());
        assert!(StubScorer::from_lexicon("rudeness word\n").is_err());
    }
}
