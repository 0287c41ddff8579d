//! Automatic response metrics over tokenized candidate/reference pairs.
//!
//! All scores are in `[0, 1]`; scaling by 100 happens only in
//! [`MetricReport::to_table`].

mod bleu;
mod distinct;
mod extrema;
mod meteor;
mod rouge;

use serde::{Deserialize, Serialize};

use crate::text::TokenSeq;

pub use bleu::{bleu_n, sentence_bleu};
pub use distinct::distinct_n;
pub use extrema::{load_embeddings, parse_embeddings, vector_extrema, EmbeddingTable};
pub use meteor::{meteor, meteor_stats, MeteorStats};
pub use rouge::{lcs_len, rouge_l, RougeScore};

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("{candidates} candidates but {references} references")]
    LengthMismatch { candidates: usize, references: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("no {n}-grams in any response")]
    NoNgrams { n: usize },
    #[error("every {side} token is out of vocabulary")]
    AllOov { side: &'static str },
    #[error("line {line}: expected {expected} values, found {found}")]
    DimensionMismatch { line: usize, expected: usize, found: usize },
    #[error("line {line}: {message}")]
    BadLine { line: usize, message: String },
    #[error("{path}: {source}")]
    UnreadableFile {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub pairs: usize,
    pub meteor: f64,
    pub bleu2: f64,
    pub bleu4: f64,
    pub rouge_l: f64,
    /// Present only when an embedding table was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extrema: Option<f64>,
    pub distinct1: f64,
    pub distinct2: f64,
    pub distinct3: f64,
}

impl MetricReport {
    pub fn to_table(&self) -> String {
        let pct = |v: f64| format!("{:.2}", v * 100.0);
        let mut rows = vec![
            ("METEOR", pct(self.meteor)),
            ("B-2", pct(self.bleu2)),
            ("B-4", pct(self.bleu4)),
            ("R-L", pct(self.rouge_l)),
        ];
        if let Some(e) = self.extrema {
            rows.push(("Extrema", pct(e)));
        }
        rows.extend([("D-1", pct(self.distinct1)), ("D-2", pct(self.distinct2)), ("D-3", pct(self.distinct3))]);
        let mut out = String::new();
        for (name, value) in rows {
            out.push_str(&format!("{name:<8} {value:>7}\n"));
        }
        out
    }
}

fn check_pairs(candidates: &[TokenSeq], references: &[TokenSeq]) -> Result<(), MetricError> {
    if candidates.len() != references.len() {
        return Err(MetricError::LengthMismatch {
            candidates: candidates.len(),
            references: references.len(),
        });
    }
    if candidates.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    Ok(())
}

/// Mean of a per-pair score; pairs with an empty side score 0.
fn mean_pairwise<F>(candidates: &[TokenSeq], references: &[TokenSeq], f: F) -> f64
where
    F: Fn(&TokenSeq, &TokenSeq) -> Result<f64, MetricError>,
{
    let total: f64 = candidates
        .iter()
        .zip(references)
        .map(|(c, r)| f(c, r).unwrap_or(0.0))
        .sum();
    total / candidates.len() as f64
}

/// Corpus ROUGE-L: mean F over pairs.
pub fn corpus_rouge_l(candidates: &[TokenSeq], references: &[TokenSeq]) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    Ok(mean_pairwise(candidates, references, |c, r| rouge_l(c, r).map(|s| s.f)))
}

pub fn corpus_meteor(candidates: &[TokenSeq], references: &[TokenSeq]) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    Ok(mean_pairwise(candidates, references, meteor))
}

/// Mean extrema cosine over the pairs where both sides have an embedded
/// token; errors if there is no such pair.
pub fn corpus_extrema(
    candidates: &[TokenSeq],
    references: &[TokenSeq],
    table: &EmbeddingTable,
) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    let scores: Vec<f64> = candidates
        .iter()
        .zip(references)
        .filter_map(|(c, r)| vector_extrema(c, r, table).ok())
        .collect();
    if scores.is_empty() {
        return Err(MetricError::AllOov { side: "pair" });
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// All metrics for parallel hypothesis and reference lists. Distinct-n is
/// computed over the hypotheses.
pub fn evaluate(
    candidates: &[TokenSeq],
    references: &[TokenSeq],
    table: Option<&EmbeddingTable>,
) -> Result<MetricReport, MetricError> {
    check_pairs(candidates, references)?;
    let distinct = |n| match distinct_n(candidates, n) {
        Err(MetricError::NoNgrams { .. }) => Ok(0.0),
        other => other,
    };
    Ok(MetricReport {
        pairs: candidates.len(),
        meteor: corpus_meteor(candidates, references)?,
        bleu2: bleu_n(candidates, references, 2)?,
        bleu4: bleu_n(candidates, references, 4)?,
        rouge_l: corpus_rouge_l(candidates, references)?,
        extrema: table.map(|t| corpus_extrema(candidates, references, t)).transpose()?,
        distinct1: distinct(1)?,
        distinct2: distinct(2)?,
        distinct3: distinct(3)?,
    })
}
