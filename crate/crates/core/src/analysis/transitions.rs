use std::collections::HashMap;
use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};

use crate::corpus::{Corpus, Strategy};

use super::AnalysisError;

/// Contiguous run of strategies from a merged sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionWindow {
    pub sequence: Vec<Strategy>,
}

impl TransitionWindow {
    pub fn hops(&self) -> usize {
        self.sequence.len()
    }

    pub fn abbreviations(&self) -> Vec<&'static str> {
        self.sequence.iter().map(|s| s.abbreviation()).collect()
    }
}

impl fmt::Display for TransitionWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.abbreviations().join("→"))
    }
}

impl Serialize for TransitionWindow {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.abbreviations())
    }
}

/// What a window count is divided by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Denominator {
    /// All windows of the same length across the corpus.
    #[default]
    Windows,
    /// Number of dialogues.
    Dialogues,
    /// Number of AI utterances.
    Utterances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionEntry {
    pub window: TransitionWindow,
    pub count: u64,
    pub per_mille: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionTable {
    pub hops: usize,
    pub denominator: Denominator,
    pub total_windows: u64,
    /// Descending by count; ties in abbreviation order.
    pub entries: Vec<TransitionEntry>,
}

impl TransitionTable {
    pub fn top(&self, n: usize) -> &[TransitionEntry] {
        &self.entries[..n.min(self.entries.len())]
    }

    pub fn to_table(&self, top: usize) -> String {
        let mut out = format!("{}-hop transitions ({} windows)\n", self.hops, self.total_windows);
        for e in self.top(top) {
            let _ = writeln!(out, "{:<40} {:>8}‰", e.window.to_string(), format!("{:.2}", e.per_mille));
        }
        out
    }
}

/// Collapses runs of equal adjacent strategies.
pub fn merge_adjacent(seq: &[Strategy]) -> Vec<Strategy> {
    let mut out: Vec<Strategy> = Vec::with_capacity(seq.len());
    for &s in seq {
        if out.last() != Some(&s) {
            out.push(s);
        }
    }
    out
}

pub fn transition_stats(c: &Corpus, hops: usize) -> Result<TransitionTable, AnalysisError> {
    transition_stats_with(c, hops, Denominator::Windows)
}

pub fn transition_stats_with(
    c: &Corpus,
    hops: usize,
    denominator: Denominator,
) -> Result<TransitionTable, AnalysisError> {
    if !(3..=5).contains(&hops) {
        return Err(AnalysisError::BadHops(hops));
    }
    let mut counts: HashMap<Vec<Strategy>, u64> = HashMap::new();
    let mut total_windows = 0u64;
    let mut ai_utterances = 0u64;
    for d in c {
        let seq: Vec<Strategy> = d.ai_strategies().collect();
        ai_utterances += seq.len() as u64;
        for w in merge_adjacent(&seq).windows(hops) {
            *counts.entry(w.to_vec()).or_insert(0) += 1;
            total_windows += 1;
        }
    }
    let den = match denominator {
        Denominator::Windows => total_windows,
        Denominator::Dialogues => c.len() as u64,
        Denominator::Utterances => ai_utterances,
    };
    let mut entries: Vec<TransitionEntry> = counts
        .into_iter()
        .map(|(sequence, count)| TransitionEntry {
            window: TransitionWindow { sequence },
            count,
            per_mille: if den == 0 { 0.0 } else { 1000.0 * count as f64 / den as f64 },
        })
        .collect();
    entries.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.window.abbreviations().cmp(&b.window.abbreviations()))
    });
    Ok(TransitionTable {
        hops,
        denominator,
        total_windows,
        entries,
    })
}
