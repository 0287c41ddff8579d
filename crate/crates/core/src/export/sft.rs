use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Dialogue, DialogueId, Speaker};

use super::ExportError;

pub const USER_TAG: &str = "User: ";
pub const ASSISTANT_TAG: &str = "Assistant: ";

/// One training pair: every earlier turn as context, the next AI turn as
/// target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub dialogue_id: DialogueId,
    pub turn: usize,
    pub context: String,
    pub target: String,
}

fn examples_for(d: &Dialogue, with_strategies: bool) -> impl Iterator<Item = SftExample> + '_ {
    let mut context = String::new();
    d.content.iter().enumerate().filter_map(move |(i, u)| {
        let example = (u.speaker == Speaker::Ai).then(|| SftExample {
            dialogue_id: d.id.clone(),
            turn: i,
            context: context.clone(),
            target: match u.strategy {
                Some(s) if with_strategies => format!("[{}] {}", s.name(), u.text),
                _ => u.text.clone(),
            },
        });
        if !context.is_empty() {
            context.push('\n');
        }
        context.push_str(if u.speaker == Speaker::User { USER_TAG } else { ASSISTANT_TAG });
        context.push_str(&u.text);
        example
    })
}

/// Lazily yields one example per AI utterance, in corpus and turn order.
pub fn export_sft(corpus: &Corpus, with_strategies: bool) -> impl Iterator<Item = SftExample> + '_ {
    corpus.iter().flat_map(move |d| examples_for(d, with_strategies))
}

/// Removes a leading `"[<Strategy Name>] "` from a target, if present.
pub fn strip_strategy_prefix(target: &str) -> &str {
    crate::corpus::Strategy::ALL
        .iter()
        .find_map(|s| {
            target
                .strip_prefix('[')
                .and_then(|t| t.strip_prefix(s.name()))
                .and_then(|t| t.strip_prefix("] "))
        })
        .unwrap_or(target)
}

/// Writes the export as JSON lines; returns the example count.
pub fn write_sft_jsonl<W: Write>(out: &mut W, corpus: &Corpus, with_strategies: bool) -> Result<usize, ExportError> {
    let mut n = 0;
    for ex in export_sft(corpus, with_strategies) {
        serde_json::to_writer(&mut *out, &ex).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
        n += 1;
    }
    Ok(n)
}
