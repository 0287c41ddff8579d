use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Strategy};
use crate::text::count_length_tokens;

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abbreviation: Option<String>,
    pub count: u64,
    pub proportion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub n_dialogues: u64,
    pub n_utterances: u64,
    pub n_ai_utterances: u64,
    pub n_tokens: u64,
    pub avg_dialogue_len: f64,
    pub avg_utterance_len: f64,
    /// All sixteen strategies in registry order.
    pub strategies: Vec<CountRow>,
    /// Scenes present in the corpus, most frequent first.
    pub scenarios: Vec<CountRow>,
}

pub fn corpus_stats(c: &Corpus) -> Result<StatReport, AnalysisError> {
    if c.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let mut n_utterances = 0u64;
    let mut n_tokens = 0u64;
    let mut strategy_counts = [0u64; Strategy::ALL.len()];
    let mut scene_counts: HashMap<&str, u64> = HashMap::new();
    for d in c {
        n_utterances += d.len() as u64;
        *scene_counts.entry(d.scene.as_str()).or_insert(0) += 1;
        for u in &d.content {
            n_tokens += count_length_tokens(&u.text) as u64;
            if let Some(s) = u.strategy {
                strategy_counts[s.index()] += 1;
            }
        }
    }
    let n_ai: u64 = strategy_counts.iter().sum();
    let n_dialogues = c.len() as u64;

    let strategies = Strategy::ALL
        .iter()
        .map(|s| CountRow {
            label: s.name().to_string(),
            abbreviation: Some(s.abbreviation().to_string()),
            count: strategy_counts[s.index()],
            proportion: ratio(strategy_counts[s.index()], n_ai),
        })
        .collect();
    let mut scenes: Vec<(&str, u64)> = scene_counts.into_iter().collect();
    scenes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let scenarios = scenes
        .into_iter()
        .map(|(name, count)| CountRow {
            label: name.to_string(),
            abbreviation: None,
            count,
            proportion: ratio(count, n_dialogues),
        })
        .collect();

    Ok(StatReport {
        n_dialogues,
        n_utterances,
        n_ai_utterances: n_ai,
        n_tokens,
        avg_dialogue_len: ratio(n_utterances, n_dialogues),
        avg_utterance_len: ratio(n_tokens, n_utterances),
        strategies,
        scenarios,
    })
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl StatReport {
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Dialogues                 {:>10}", self.n_dialogues);
        let _ = writeln!(out, "Utterances                {:>10}", self.n_utterances);
        let _ = writeln!(out, "Avg. length of dialogues  {:>10.1}", self.avg_dialogue_len);
        let _ = writeln!(out, "Avg. length of utterances {:>10.1}", self.avg_utterance_len);
        let _ = writeln!(out, "\n{:<32} {:>5} {:>8} {:>7}", "Strategy", "Abbr", "Count", "%");
        for row in &self.strategies {
            let _ = writeln!(
                out,
                "{:<32} {:>5} {:>8} {:>6.1}%",
                row.label,
                row.abbreviation.as_deref().unwrap_or(""),
                row.count,
                row.proportion * 100.0
            );
        }
        let _ = writeln!(out, "{:<32} {:>5} {:>8}", "Overall", "", self.n_ai_utterances);
        let _ = writeln!(out, "\n{:<48} {:>8} {:>7}", "Scenario", "Count", "%");
        for row in &self.scenarios {
            let _ = writeln!(out, "{:<48} {:>8} {:>6.1}%", row.label, row.count, row.proportion * 100.0);
        }
        out
    }
}
