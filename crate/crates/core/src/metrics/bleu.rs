use crate::text::{ngram_counts, TokenSeq};

use super::{check_pairs, MetricError};

/// Clipped matches and candidate n-gram totals for orders `1..=n`.
fn order_stats(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> Vec<(u64, u64)> {
    (1..=n)
        .map(|k| {
            let cand = ngram_counts(candidate.tokens(), k);
            let refs = ngram_counts(reference.tokens(), k);
            let matched: usize = cand
                .iter()
                .map(|(gram, &c)| c.min(refs.get(gram).copied().unwrap_or(0)))
                .sum();
            (matched as u64, candidate.len().saturating_sub(k - 1) as u64)
        })
        .collect()
}

fn brevity_penalty(c: u64, r: u64) -> f64 {
    if c == 0 {
        0.0
    } else if c > r {
        1.0
    } else {
        (1.0 - r as f64 / c as f64).exp()
    }
}

/// Corpus-level BLEU with uniform weights over orders `1..=n` and no
/// smoothing. Any order with zero matches gives 0.
pub fn bleu_n(candidates: &[TokenSeq], references: &[TokenSeq], n: usize) -> Result<f64, MetricError> {
    check_pairs(candidates, references)?;
    if n == 0 {
        return Err(MetricError::EmptyInput);
    }
    let mut totals = vec![(0u64, 0u64); n];
    let (mut c, mut r) = (0u64, 0u64);
    for (cand, reference) in candidates.iter().zip(references) {
        for (acc, (m, t)) in totals.iter_mut().zip(order_stats(cand, reference, n)) {
            acc.0 += m;
            acc.1 += t;
        }
        c += cand.len() as u64;
        r += reference.len() as u64;
    }
    if totals.iter().any(|&(m, t)| m == 0 || t == 0) {
        return Ok(0.0);
    }
    let log_mean = totals.iter().map(|&(m, t)| (m as f64 / t as f64).ln()).sum::<f64>() / n as f64;
    Ok(brevity_penalty(c, r) * log_mean.exp())
}

/// Sentence-level BLEU with add-one smoothing on orders above 1, for
/// per-response diagnostics.
pub fn sentence_bleu(candidate: &TokenSeq, reference: &TokenSeq, n: usize) -> f64 {
    if n == 0 || candidate.is_empty() {
        return 0.0;
    }
    let stats = order_stats(candidate, reference, n);
    if stats[0].0 == 0 {
        return 0.0;
    }
    let log_mean = stats
        .iter()
        .enumerate()
        .map(|(i, &(m, t))| {
            if i == 0 {
                (m as f64 / t as f64).ln()
            } else {
                ((m + 1) as f64 / (t + 1) as f64).ln()
            }
        })
        .sum::<f64>()
        / n as f64;
    brevity_penalty(candidate.len() as u64, reference.len() as u64) * log_mean.exp()
}
