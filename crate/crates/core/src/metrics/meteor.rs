//! METEOR with exact unigram matching only (no stemming or synonyms).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::TokenSeq;

use super::MetricError;

/// Search nodes explored before settling for the best alignment found.
const SEARCH_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorStats {
    pub matches: usize,
    pub chunks: usize,
    pub precision: f64,
    pub recall: f64,
    pub f_mean: f64,
    pub penalty: f64,
    pub score: f64,
    /// False when the chunk search hit its budget.
    pub exact: bool,
}

pub fn meteor(candidate: &TokenSeq, reference: &TokenSeq) -> Result<f64, MetricError> {
    meteor_stats(candidate, reference).map(|s| s.score)
}

pub fn meteor_stats(candidate: &TokenSeq, reference: &TokenSeq) -> Result<MeteorStats, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut c = Vec::with_capacity(candidate.len());
    let mut r = Vec::with_capacity(reference.len());
    for (seq, out) in [(candidate, &mut c), (reference, &mut r)] {
        for t in seq.tokens() {
            let next = ids.len();
            out.push(*ids.entry(t.as_str()).or_insert(next));
        }
    }
    let (matches, chunks, exact) = min_chunk_alignment(&c, &r);
    let mut stats = MeteorStats {
        matches,
        chunks,
        precision: 0.0,
        recall: 0.0,
        f_mean: 0.0,
        penalty: 0.0,
        score: 0.0,
        exact,
    };
    if matches == 0 {
        return Ok(stats);
    }
    let m = matches as f64;
    stats.precision = m / c.len() as f64;
    stats.recall = m / r.len() as f64;
    stats.f_mean = 10.0 * stats.precision * stats.recall / (stats.recall + 9.0 * stats.precision);
    stats.penalty = 0.5 * (chunks as f64 / m).powi(3);
    stats.score = stats.f_mean * (1.0 - stats.penalty);
    Ok(stats)
}

/// Maximum one-to-one exact matching with the fewest chunks.
/// Returns (matches, chunks, exact).
fn min_chunk_alignment(c: &[usize], r: &[usize]) -> (usize, usize, bool) {
    let vocab = c.iter().chain(r).max().map_or(0, |&v| v + 1);
    let mut ref_positions = vec![Vec::new(); vocab];
    for (j, &t) in r.iter().enumerate() {
        ref_positions[t].push(j);
    }
    let mut cand_count = vec![0usize; vocab];
    for &t in c {
        cand_count[t] += 1;
    }
    let m: usize = (0..vocab).map(|t| cand_count[t].min(ref_positions[t].len())).sum();
    if m == 0 {
        return (0, 0, true);
    }
    let greedy = greedy_chunks(c, r);
    let mut search = Search {
        c,
        ref_positions: &ref_positions,
        used: vec![false; r.len()],
        rem_c: cand_count,
        avail_r: ref_positions.iter().map(Vec::len).collect(),
        m,
        best: greedy,
        nodes: 0,
    };
    search.dfs(0, None, 0, 0);
    (m, search.best, search.nodes <= SEARCH_BUDGET)
}

struct Search<'a> {
    c: &'a [usize],
    ref_positions: &'a [Vec<usize>],
    used: Vec<bool>,
    /// Candidate occurrences per token at positions not yet visited.
    rem_c: Vec<usize>,
    /// Unused reference occurrences per token.
    avail_r: Vec<usize>,
    m: usize,
    best: usize,
    nodes: usize,
}

impl Search<'_> {
    fn dfs(&mut self, i: usize, prev: Option<usize>, matched: usize, chunks: usize) {
        self.nodes += 1;
        if self.nodes > SEARCH_BUDGET || chunks >= self.best {
            return;
        }
        if matched == self.m {
            self.best = chunks;
            return;
        }
        if i == self.c.len() {
            return;
        }
        let t = self.c[i];
        let continuation = prev.map(|p| p + 1);
        let mut options: Vec<usize> = self.ref_positions[t].iter().copied().filter(|&j| !self.used[j]).collect();
        if let Some(k) = continuation.and_then(|n| options.iter().position(|&j| j == n)) {
            options.swap(0, k);
        }
        self.rem_c[t] -= 1;
        for j in options {
            let cost = usize::from(Some(j) != continuation);
            self.used[j] = true;
            self.avail_r[t] -= 1;
            self.dfs(i + 1, Some(j), matched + 1, chunks + cost);
            self.avail_r[t] += 1;
            self.used[j] = false;
        }
        // Leaving position i unmatched must still allow m matches for `t`.
        if self.rem_c[t] >= self.avail_r[t] {
            self.dfs(i + 1, None, matched, chunks);
        }
        self.rem_c[t] += 1;
    }
}

/// Longest-run-first alignment; a maximum matching that seeds the bound.
fn greedy_chunks(c: &[usize], r: &[usize]) -> usize {
    let mut used_c = vec![false; c.len()];
    let mut used_r = vec![false; r.len()];
    let mut chunks = 0;
    loop {
        let mut best: Option<(usize, usize, usize)> = None;
        for i in 0..c.len() {
            for j in 0..r.len() {
                let mut len = 0;
                while i + len < c.len()
                    && j + len < r.len()
                    && !used_c[i + len]
                    && !used_r[j + len]
                    && c[i + len] == r[j + len]
                {
                    len += 1;
                }
                if len > best.map_or(0, |b| b.2) {
                    best = Some((i, j, len));
                }
            }
        }
        let Some((i, j, len)) = best else { return chunks };
        for k in 0..len {
            used_c[i + k] = true;
            used_r[j + k] = true;
        }
        chunks += 1;
    }
}
