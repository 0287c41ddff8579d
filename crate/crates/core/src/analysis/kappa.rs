use serde::Serialize;

/// Fleiss' kappa, or `Undefined` when expected agreement is 1 (every
/// rating fell in one category).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value")]
pub enum Kappa {
    Value(f64),
    Undefined,
}

impl Kappa {
    pub fn value(self) -> Option<f64> {
        match self {
            Kappa::Value(v) => Some(v),
            Kappa::Undefined => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum KappaError {
    #[error("no items to rate")]
    Empty,
    #[error("item {item} has {found} ratings, expected {expected}")]
    UnequalRaterCounts { item: usize, expected: u64, found: u64 },
    #[error("item {item} has {found} categories, expected {expected}")]
    RaggedCategories { item: usize, expected: usize, found: usize },
    #[error("at least two raters per item are required")]
    TooFewRaters,
}

/// `ratings[i][j]` is the number of raters who put item `i` in category `j`.
pub fn fleiss_kappa(ratings: &[Vec<u64>]) -> Result<Kappa, KappaError> {
    let first = ratings.first().ok_or(KappaError::Empty)?;
    let k = first.len();
    let n: u64 = first.iter().sum();
    for (item, row) in ratings.iter().enumerate() {
        if row.len() != k {
            return Err(KappaError::RaggedCategories { item, expected: k, found: row.len() });
        }
        let found: u64 = row.iter().sum();
        if found != n {
            return Err(KappaError::UnequalRaterCounts { item, expected: n, found });
        }
    }
    if n < 2 {
        return Err(KappaError::TooFewRaters);
    }
    let items = ratings.len() as f64;
    let nf = n as f64;
    let mut column = vec![0u64; k];
    let mut p_bar = 0.0;
    for row in ratings {
        let sq: u64 = row.iter().map(|c| c * c).sum();
        p_bar += (sq - n) as f64 / (nf * (nf - 1.0));
        for (j, c) in row.iter().enumerate() {
            column[j] += c;
        }
    }
    p_bar /= items;
    let p_e: f64 = column
        .iter()
        .map(|&c| {
            let p = c as f64 / (items * nf);
            p * p
        })
        .sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Ok(Kappa::Undefined);
    }
    Ok(Kappa::Value(((p_bar - p_e) / (1.0 - p_e)).clamp(-1.0, 1.0)))
}

/// Turns per-item rating lists into the count matrix `fleiss_kappa` takes.
/// Ratings at or above `n_categories` are ignored.
pub fn category_counts(items: &[Vec<u8>], n_categories: usize) -> Vec<Vec<u64>> {
    items
        .iter()
        .map(|ratings| {
            let mut row = vec![0u64; n_categories];
            for &r in ratings {
                if let Some(slot) = row.get_mut(r as usize) {
                    *slot += 1;
                }
            }
            row
        })
        .collect()
}
