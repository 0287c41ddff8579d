use std::collections::HashSet;

use crate::text::TokenSeq;

use super::MetricError;

/// Unique n-grams over all responses divided by total n-gram occurrences.
pub fn distinct_n(responses: &[TokenSeq], n: usize) -> Result<f64, MetricError> {
    if n == 0 {
        return Err(MetricError::NoNgrams { n });
    }
    let mut unique: HashSet<&[String]> = HashSet::new();
    let mut total = 0usize;
    for r in responses {
        if r.len() < n {
            continue;
        }
        for gram in r.tokens().windows(n) {
            unique.insert(gram);
            total += 1;
        }
    }
    if total == 0 {
        return Err(MetricError::NoNgrams { n });
    }
    Ok(unique.len() as f64 / total as f64)
}
