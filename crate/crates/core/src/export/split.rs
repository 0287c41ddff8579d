use std::collections::{BTreeMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{short_hash, Corpus, DialogueId};

use super::ExportError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self { train: 0.9, test: 0.1 }
    }
}

impl SplitRatios {
    pub fn check(&self) -> Result<(), ExportError> {
        let ok = self.train > 0.0 && self.test > 0.0 && ((self.train + self.test) - 1.0).abs() < 1e-9;
        if ok {
            Ok(())
        } else {
            Err(ExportError::BadRatios { train: self.train, test: self.test })
        }
    }
}

/// Test-set size per scenario: `round(N * test)` in total, distributed by
/// largest remainder so each scenario gets the floor or ceiling of its
/// exact share.
fn test_quota(sizes: &BTreeMap<&str, usize>, test: f64) -> BTreeMap<String, usize> {
    let total: usize = sizes.values().sum();
    let target = ((total as f64) * test).round() as usize;
    let mut rows: Vec<(&str, usize, f64)> = sizes
        .iter()
        .map(|(&s, &n)| {
            let exact = n as f64 * test;
            (s, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let assigned: usize = rows.iter().map(|r| r.1).sum();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].2.total_cmp(&rows[a].2).then(rows[a].0.cmp(rows[b].0)));
    for &i in order.iter().take(target.saturating_sub(assigned)) {
        rows[i].1 += 1;
    }
    rows.into_iter().map(|(s, k, _)| (s.to_string(), k)).collect()
}

/// Stratified split by scenario, deterministic in `rng_seed`. Both halves
/// keep the corpus order.
pub fn split(corpus: &Corpus, ratios: SplitRatios, rng_seed: u64) -> Result<(Corpus, Corpus), ExportError> {
    ratios.check()?;
    let mut by_scene: BTreeMap<&str, Vec<&DialogueId>> = BTreeMap::new();
    for d in corpus.iter() {
        by_scene.entry(d.scene.as_str()).or_default().push(&d.id);
    }
    let sizes = by_scene.iter().map(|(s, v)| (*s, v.len())).collect();
    let quota = test_quota(&sizes, ratios.test);
    let mut test_ids: HashSet<&DialogueId> = HashSet::new();
    for (scene, mut ids) in by_scene {
        let h = short_hash(format!("{rng_seed}:{scene}").as_bytes());
        let mut rng = ChaCha8Rng::seed_from_u64(u64::from_str_radix(&h, 16).expect("hex"));
        ids.shuffle(&mut rng);
        test_ids.extend(ids.into_iter().take(quota[scene]));
    }
    let (test, train): (Vec<_>, Vec<_>) = corpus.iter().cloned().partition(|d| test_ids.contains(&d.id));
    let build = |v| Corpus::from_dialogues(v).expect("ids are unique in the source corpus");
    Ok((build(train), build(test)))
}
