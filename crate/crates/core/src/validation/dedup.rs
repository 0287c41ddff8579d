//! Trigram-multiset near-duplicate scoring.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::corpus::{Dialogue, DialogueId};
use crate::text::{ngram_counts, tokenize};

/// Tokens of all utterances, in order, as one stream.
pub fn token_stream(d: &Dialogue) -> Vec<String> {
    d.content
        .iter()
        .flat_map(|u| tokenize(&u.text).tokens().to_vec())
        .collect()
}

/// Trigram multiset. A stream shorter than three tokens is one gram.
fn grams(tokens: &[String]) -> HashMap<&[String], usize> {
    if tokens.len() < 3 {
        return HashMap::from([(tokens, 1)]);
    }
    ngram_counts(tokens, 3)
}

/// Multiset Jaccard of the two trigram bags: Σ min / Σ max.
pub fn near_duplicate_score(a: &Dialogue, b: &Dialogue) -> f64 {
    stream_score(&token_stream(a), &token_stream(b))
}

pub fn stream_score(a: &[String], b: &[String]) -> f64 {
    let (ga, gb) = (grams(a), grams(b));
    let mut inter = 0usize;
    let mut union = 0usize;
    for (g, &ca) in &ga {
        let cb = gb.get(g).copied().unwrap_or(0);
        inter += ca.min(cb);
        union += ca.max(cb);
    }
    union += gb.iter().filter(|(g, _)| !ga.contains_key(*g)).map(|(_, c)| c).sum::<usize>();
    if union == 0 {
        return 1.0;
    }
    inter as f64 / union as f64
}

fn hashed_grams(tokens: &[String]) -> HashMap<u64, usize> {
    let mut out = HashMap::new();
    for (g, c) in grams(tokens) {
        let mut h = DefaultHasher::new();
        g.hash(&mut h);
        *out.entry(h.finish()).or_insert(0) += c;
    }
    out
}

/// Inverted trigram index over a corpus snapshot, so a candidate is only
/// compared with dialogues it shares at least one gram with.
#[derive(Debug, Default, Clone)]
pub struct DedupIndex {
    ids: Vec<DialogueId>,
    sizes: Vec<usize>,
    postings: HashMap<u64, Vec<(u32, u32)>>,
}

impl DedupIndex {
    pub fn new<'a>(dialogues: impl IntoIterator<Item = &'a Dialogue>) -> Self {
        let mut index = Self::default();
        for d in dialogues {
            index.insert(d);
        }
        index
    }

    pub fn insert(&mut self, d: &Dialogue) {
        let doc = self.ids.len() as u32;
        let bag = hashed_grams(&token_stream(d));
        self.sizes.push(bag.values().sum());
        self.ids.push(d.id.clone());
        for (g, c) in bag {
            self.postings.entry(g).or_default().push((doc, c as u32));
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Highest score against any indexed dialogue, with its id.
    pub fn best_match(&self, d: &Dialogue) -> Option<(DialogueId, f64)> {
        let bag = hashed_grams(&token_stream(d));
        let size: usize = bag.values().sum();
        let mut shared: HashMap<u32, usize> = HashMap::new();
        for (g, &c) in &bag {
            if let Some(list) = self.postings.get(g) {
                for &(doc, dc) in list {
                    *shared.entry(doc).or_insert(0) += c.min(dc as usize);
                }
            }
        }
        shared
            .into_iter()
            .map(|(doc, inter)| {
                let union = size + self.sizes[doc as usize] - inter;
                (doc, inter as f64 / union as f64)
            })
            .max_by(|x, y| x.1.total_cmp(&y.1).then(y.0.cmp(&x.0)))
            .map(|(doc, score)| (self.ids[doc as usize].clone(), score))
    }
}
