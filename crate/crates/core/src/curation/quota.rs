use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::ScenarioRegistry;

use super::CurationError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioQuota {
    pub scenario: String,
    pub target_count: u64,
    pub produced: u64,
}

/// Contents of `quotas.toml`:
///
/// ```toml
/// [targets]
/// "Academic Stress" = 40
/// "Career Transitions" = 25
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuotaConfig {
    #[serde(default)]
    pub targets: BTreeMap<String, u64>,
}

impl QuotaConfig {
    pub fn from_toml(text: &str) -> Result<Self, CurationError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CurationError::Config(e.to_string()))?;
        if let Some((name, _)) = cfg.targets.iter().find(|(_, &t)| t == 0) {
            return Err(CurationError::Config(format!("target for {name:?} must be positive")));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CurationError> {
        let text = std::fs::read_to_string(path).map_err(|e| CurationError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("quota config serializes")
    }

    /// Splits `total` over the canonical scenarios in proportion to their
    /// reference counts, by largest remainder.
    pub fn proportional(registry: &ScenarioRegistry, total: u64) -> Self {
        let weighted: Vec<(&str, u64)> = registry
            .iter()
            .filter_map(|s| s.reference_count.map(|c| (s.name.as_str(), c)))
            .collect();
        let sum: u64 = weighted.iter().map(|(_, c)| c).sum();
        let mut targets = BTreeMap::new();
        if sum == 0 {
            return Self { targets };
        }
        let mut shares: Vec<(&str, u64, u64)> = weighted
            .iter()
            .map(|&(name, c)| {
                let exact = total as u128 * c as u128;
                (name, (exact / sum as u128) as u64, (exact % sum as u128) as u64)
            })
            .collect();
        let assigned: u64 = shares.iter().map(|s| s.1).sum();
        let mut order: Vec<usize> = (0..shares.len()).collect();
        order.sort_by(|&a, &b| shares[b].2.cmp(&shares[a].2).then(shares[a].0.cmp(shares[b].0)));
        for &i in order.iter().take((total - assigned) as usize) {
            shares[i].1 += 1;
        }
        for (name, n, _) in shares {
            if n > 0 {
                targets.insert(name.to_string(), n);
            }
        }
        Self { targets }
    }
}
