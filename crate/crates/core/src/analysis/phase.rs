use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, Strategy, STRATEGY_COUNT};

use super::AnalysisError;

/// Relative position of one AI utterance. `k` is 1-based over all
/// utterances of both speakers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhasePoint {
    pub strategy: Strategy,
    pub k: usize,
    pub n: usize,
    pub position: f64,
}

impl PhasePoint {
    /// 1-based bin for half-open intervals ((b-1)/n_bins, b/n_bins],
    /// computed exactly as ceil(k·n_bins / N).
    pub fn bin(&self, n_bins: usize) -> usize {
        (self.k * n_bins).div_ceil(self.n)
    }
}

pub fn phase_points(d: &Dialogue) -> impl Iterator<Item = PhasePoint> + '_ {
    let n = d.len();
    d.content.iter().enumerate().filter_map(move |(i, u)| {
        u.strategy.map(|strategy| PhasePoint {
            strategy,
            k: i + 1,
            n,
            position: (i + 1) as f64 / n as f64,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatrix {
    pub n_bins: usize,
    /// `counts[bin][strategy index]`, bins 0-based here.
    pub counts: Vec<Vec<u64>>,
}

impl PhaseMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn bin_total(&self, bin: usize) -> u64 {
        self.counts[bin].iter().sum()
    }

    /// Within-bin proportions; an empty bin is all zeros.
    pub fn proportions(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn to_table(&self) -> String {
        let props = self.proportions();
        let mut out = format!("{:<6}", "Phase");
        for s in Strategy::ALL {
            let _ = write!(out, "{:>6}", s.abbreviation());
        }
        out.push('\n');
        for (b, row) in props.iter().enumerate() {
            let _ = write!(out, "{:<6}", b + 1);
            for p in row {
                let _ = write!(out, "{:>6.1}", p * 100.0);
            }
            out.push('\n');
        }
        out
    }
}

pub fn phase_distribution(c: &Corpus, n_bins: usize) -> Result<PhaseMatrix, AnalysisError> {
    if n_bins == 0 {
        return Err(AnalysisError::ZeroBins);
    }
    if c.is_empty() {
        return Err(AnalysisError::EmptyCorpus);
    }
    let mut counts = vec![vec![0u64; STRATEGY_COUNT]; n_bins];
    for d in c {
        for p in phase_points(d) {
            counts[p.bin(n_bins) - 1][p.strategy.index()] += 1;
        }
    }
    Ok(PhaseMatrix { n_bins, counts })
}
