//! Train/test splitting and supervised fine-tuning export.

mod sft;
mod split;

pub use sft::{export_sft, strip_strategy_prefix, write_sft_jsonl, SftExample, ASSISTANT_TAG, USER_TAG};
pub use split::{split, SplitRatios};

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("split ratios must be positive and sum to 1, got train {train} / test {test}")]
    BadRatios { train: f64, test: f64 },
    #[error("write failed: {0}")]
    Io(#[from] std::io::Error),
}
