use std::collections::HashMap;
use std::path::Path;

use crate::text::TokenSeq;

use super::MetricError;

/// Word vectors sharing one dimension. Immutable once built.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dimension: Option<usize>,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Undefined until the first vector is inserted.
    pub fn dimension(&self) -> Option<usize> {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Inserts a vector. Returns Ok(false) if the token was already present
    /// (the first vector is kept).
    pub fn insert(&mut self, token: impl Into<String>, vector: Vec<f64>) -> Result<bool, MetricError> {
        let expected = *self.dimension.get_or_insert(vector.len());
        if vector.len() != expected || expected == 0 {
            return Err(MetricError::DimensionMismatch { line: 0, expected, found: vector.len() });
        }
        let token = token.into();
        if self.vectors.contains_key(&token) {
            return Ok(false);
        }
        self.vectors.insert(token, vector);
        Ok(true)
    }

    /// Per-dimension value of largest magnitude over in-vocabulary tokens,
    /// sign kept. A tie between +x and -x picks -x.
    pub fn extrema_vector(&self, seq: &TokenSeq) -> Option<Vec<f64>> {
        let dim = self.dimension?;
        let mut max = vec![f64::NEG_INFINITY; dim];
        let mut min = vec![f64::INFINITY; dim];
        let mut any = false;
        for v in seq.tokens().iter().filter_map(|t| self.get(t)) {
            any = true;
            for d in 0..dim {
                max[d] = max[d].max(v[d]);
                min[d] = min[d].min(v[d]);
            }
        }
        any.then(|| {
            max.iter()
                .zip(&min)
                .map(|(&hi, &lo)| if hi > lo.abs() { hi } else { lo })
                .collect()
        })
    }
}

/// Reads a text embedding file: `token v1 .. vD` per line, with an optional
/// leading `count dimension` header.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingTable, MetricError> {
    let text = std::fs::read_to_string(path).map_err(|source| MetricError::UnreadableFile {
        path: path.display().to_string(),
        source,
    })?;
    parse_embeddings(&text)
}

pub fn parse_embeddings(text: &str) -> Result<EmbeddingTable, MetricError> {
    let mut table = EmbeddingTable::new();
    for (idx, line) in text.lines().enumerate() {
        let number = idx + 1;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if idx == 0 && rest.len() == 1 && token.parse::<u64>().is_ok() && rest[0].parse::<u64>().is_ok() {
            continue;
        }
        let values = rest
            .iter()
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| MetricError::BadLine { line: number, message: e.to_string() })?;
        if values.is_empty() {
            return Err(MetricError::BadLine { line: number, message: format!("no values for {token:?}") });
        }
        match table.insert(token, values) {
            Ok(true) => {}
            Ok(false) => log::warn!("embeddings line {number}: duplicate token {token:?} ignored"),
            Err(MetricError::DimensionMismatch { expected, found, .. }) => {
                return Err(MetricError::DimensionMismatch { line: number, expected, found })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(table)
}

/// Cosine similarity of the two extrema vectors, clamped to [-1, 1].
pub fn vector_extrema(candidate: &TokenSeq, reference: &TokenSeq, table: &EmbeddingTable) -> Result<f64, MetricError> {
    let a = table.extrema_vector(candidate).ok_or(MetricError::AllOov { side: "candidate" })?;
    let b = table.extrema_vector(reference).ok_or(MetricError::AllOov { side: "reference" })?;
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let denom = norm(&a) * norm(&b);
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}
