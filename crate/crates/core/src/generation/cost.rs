use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub input: u64,
    pub output: u64,
}

impl AddAssign for TokenUsage {
    fn add_assign(&mut self, rhs: Self) {
        self.input += rhs.input;
        self.output += rhs.output;
    }
}

/// Currency per 1,000 tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pricing {
    pub input_per_1k: f64,
    pub output_per_1k: f64,
}

impl Default for Pricing {
    fn default() -> Self {
        // gpt-3.5-turbo list price, 2023.
        Self {
            input_per_1k: 0.0015,
            output_per_1k: 0.002,
        }
    }
}

/// Average per-dialogue token counts; fractional values are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageTokens {
    pub input: f64,
    pub output: f64,
}

pub fn estimate_cost(n_dialogues: u64, avg_tokens: AverageTokens, pricing: Pricing) -> f64 {
    n_dialogues as f64
        * (avg_tokens.input * pricing.input_per_1k + avg_tokens.output * pricing.output_per_1k)
        / 1000.0
}

/// Cost of tokens actually consumed.
pub fn usage_cost(usage: TokenUsage, pricing: Pricing) -> f64 {
    (usage.input as f64 * pricing.input_per_1k + usage.output as f64 * pricing.output_per_1k)
        / 1000.0
}
