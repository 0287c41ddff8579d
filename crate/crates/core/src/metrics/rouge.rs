use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::TokenSeq;

use super::MetricError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
}

/// Longest common subsequence length, bit-parallel over `a` (Hyyrö's
/// formulation): `V' = (V + (V & M)) | (V & !M)`, LCS = zero bits of `V`.
pub fn lcs_len<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let words = a.len().div_ceil(64);
    let mut masks: HashMap<&T, Vec<u64>> = HashMap::new();
    for (i, x) in a.iter().enumerate() {
        masks.entry(x).or_insert_with(|| vec![0; words])[i / 64] |= 1 << (i % 64);
    }
    let mut v = vec![u64::MAX; words];
    for y in b {
        let Some(m) = masks.get(y) else { continue };
        let mut carry = 0u64;
        for w in 0..words {
            let u = v[w] & m[w];
            let (s1, c1) = v[w].overflowing_add(u);
            let (s2, c2) = s1.overflowing_add(carry);
            carry = (c1 | c2) as u64;
            v[w] = s2 | (v[w] & !m[w]);
        }
    }
    let tail = a.len() % 64;
    v.iter()
        .enumerate()
        .map(|(w, &x)| {
            let valid = if w == words - 1 && tail != 0 { (1u64 << tail) - 1 } else { u64::MAX };
            (!x & valid).count_ones() as usize
        })
        .sum()
}

pub fn rouge_l(candidate: &TokenSeq, reference: &TokenSeq) -> Result<RougeScore, MetricError> {
    if candidate.is_empty() || reference.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let l = lcs_len(candidate.tokens(), reference.tokens()) as f64;
    let precision = l / candidate.len() as f64;
    let recall = l / reference.len() as f64;
    let f = if l == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
    Ok(RougeScore { precision, recall, f })
}
