//! Tokenization shared by dedup, statistics and metrics.

use std::collections::HashMap;
use std::hash::Hash;

/// Lowercased token sequence produced by [`tokenize`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct TokenSeq {
    tokens: Vec<String>,
}

impl TokenSeq {
    /// Wraps tokens as-is. Callers are expected to have tokenized already.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn ngrams(&self, n: usize) -> impl Iterator<Item = &[String]> {
        let n = n.max(1);
        self.tokens.windows(n)
    }
}

/// Lowercase, remove punctuation characters, split on whitespace.
pub fn tokenize(text: &str) -> TokenSeq {
    let tokens = text
        .split_whitespace()
        .map(|raw| {
            raw.chars()
                .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punctuation(*c))
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|t| !t.is_empty())
        .collect();
    TokenSeq { tokens }
}

/// Utterance length in the unit used by corpus statistics: whitespace
/// tokens, not counting tokens made only of punctuation.
pub fn count_length_tokens(text: &str) -> usize {
    text.split_whitespace()
        .filter(|t| !t.chars().all(|c| c.is_ascii_punctuation() || is_unicode_punctuation(c)))
        .count()
}

fn is_unicode_punctuation(c: char) -> bool {
    matches!(
        c,
        '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}' | '\u{00A1}' | '\u{00A7}' | '\u{00AB}'
            | '\u{00B6}' | '\u{00B7}' | '\u{00BB}' | '\u{00BF}' | '\u{3001}'..='\u{3003}'
    )
}

/// Multiset of n-grams.
pub fn ngram_counts<T: Eq + Hash + Clone>(items: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || items.len() < n {
        return counts;
    }
    for gram in items.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}
