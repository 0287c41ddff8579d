use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, DialogueId};

use super::CurationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SeedOrigin {
    Manual,
    Promoted,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedEntry {
    pub id: DialogueId,
    pub origin: SeedOrigin,
}

/// Seed dialogue ids per scenario, oldest first.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPool {
    entries: BTreeMap<String, Vec<SeedEntry>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectOptions {
    /// Borrow seeds from other scenarios when a scenario has fewer than `k`.
    pub global_fallback: bool,
    /// Only the most recent `M` entries of a scenario are eligible.
    pub seed_window: Option<usize>,
}

impl SeedPool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry; returns false if the id is already present for the scenario.
    pub fn add(&mut self, scenario: &str, id: DialogueId, origin: SeedOrigin) -> bool {
        let list = self.entries.entry(scenario.to_string()).or_default();
        if list.iter().any(|e| e.id == id) {
            return false;
        }
        list.push(SeedEntry { id, origin });
        true
    }

    pub fn entries(&self, scenario: &str) -> &[SeedEntry] {
        self.entries.get(scenario).map_or(&[], Vec::as_slice)
    }

    pub fn scenario_len(&self, scenario: &str) -> usize {
        self.entries(scenario).len()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn scenarios(&self) -> impl Iterator<Item = (&str, &[SeedEntry])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    fn eligible(&self, scenario: &str, window: Option<usize>) -> &[SeedEntry] {
        let list = self.entries(scenario);
        match window {
            Some(m) if m < list.len() => &list[list.len() - m..],
            _ => list,
        }
    }
}

/// Samples `k` distinct seeds uniformly without replacement.
///
/// With `global_fallback`, all eligible scenario seeds are used and the
/// remainder is sampled from the other scenarios.
pub fn select_seeds(
    pool: &SeedPool,
    corpus: &Corpus,
    scenario: &str,
    k: usize,
    rng_seed: u64,
    options: SelectOptions,
) -> Result<Vec<Dialogue>, CurationError> {
    let own = pool.eligible(scenario, options.seed_window);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let chosen: Vec<&DialogueId> = if own.len() >= k {
        sample(&mut rng, own.len(), k).iter().map(|i| &own[i].id).collect()
    } else if options.global_fallback {
        let others: Vec<&DialogueId> = pool
            .scenarios()
            .filter(|(s, _)| *s != scenario)
            .flat_map(|(s, _)| pool.eligible(s, options.seed_window))
            .map(|e| &e.id)
            .collect();
        let need = k - own.len();
        if others.len() < need {
            return Err(CurationError::InsufficientSeeds {
                scenario: scenario.to_string(),
                needed: k,
                available: own.len() + others.len(),
            });
        }
        let mut ids: Vec<&DialogueId> = own.iter().map(|e| &e.id).collect();
        ids.extend(sample(&mut rng, others.len(), need).iter().map(|i| others[i]));
        ids
    } else {
        return Err(CurationError::InsufficientSeeds {
            scenario: scenario.to_string(),
            needed: k,
            available: own.len(),
        });
    };
    chosen
        .into_iter()
        .map(|id| {
            corpus
                .get(id)
                .cloned()
                .ok_or_else(|| CurationError::UnknownDialogue(id.to_string()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Strategy, Utterance};

    fn seed(scene: &str, tag: &str) -> Dialogue {
        Dialogue::new(scene, tag, vec![Utterance::user(tag), Utterance::ai(Strategy::Others, "ok")])
    }

    fn setup(n_academic: usize, n_career: usize) -> (SeedPool, Corpus) {
        let mut pool = SeedPool::new();
        let mut corpus = Corpus::new();
        for (scene, n) in [("Academic Stress", n_academic), ("Career Transitions", n_career)] {
            for i in 0..n {
                let d = seed(scene, &format!("{scene} {i}"));
                pool.add(scene, d.id.clone(), SeedOrigin::Manual);
                corpus.push(d).unwrap();
            }
        }
        (pool, corpus)
    }

    #[test]
    fn exact_pool_returns_both() {
        let (pool, corpus) = setup(2, 0);
        let a = select_seeds(&pool, &corpus, "Academic Stress", 2, 7, SelectOptions::default()).unwrap();
        let mut ids: Vec<_> = a.iter().map(|d| d.id.clone()).collect();
        ids.sort();
        let mut expected: Vec<_> = pool.entries("Academic Stress").iter().map(|e| e.id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        let b = select_seeds(&pool, &corpus, "Academic Stress", 2, 7, SelectOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn insufficient_and_fallback() {
        let (pool, corpus) = setup(2, 5);
        let err = select_seeds(&pool, &corpus, "Academic Stress", 3, 1, SelectOptions::default());
        assert!(matches!(err, Err(CurationError::InsufficientSeeds { available: 2, .. })));
        let opts = SelectOptions { global_fallback: true, seed_window: None };
        let got = select_seeds(&pool, &corpus, "Academic Stress", 3, 1, opts).unwrap();
        assert_eq!(got.iter().filter(|d| d.scene == "Academic Stress").count(), 2);
        assert_eq!(got.len(), 3);
    }

    #[test]
    fn window_limits_to_recent() {
        let (pool, corpus) = setup(6, 0);
        let opts = SelectOptions { global_fallback: false, seed_window: Some(2) };
        for seed_value in 0..20 {
            let got = select_seeds(&pool, &corpus, "Academic Stress", 2, seed_value, opts).unwrap();
            for d in got {
                assert!(d.description.ends_with(" 4") || d.description.ends_with(" 5"));
            }
        }
    }

    #[test]
    fn add_is_idempotent() {
        let mut pool = SeedPool::new();
        assert!(pool.add("A", "x".into(), SeedOrigin::Manual));
        assert!(!pool.add("A", "x".into(), SeedOrigin::Promoted));
        assert_eq!(pool.len(), 1);
    }
}
