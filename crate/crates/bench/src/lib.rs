//! Reproducible synthetic inputs for the benchmarks.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use supportloop_core::{tokenize, Corpus, Dialogue, Strategy, TokenSeq, Utterance};

const WORDS: &[&str] = &[
    "i", "feel", "tired", "exam", "deadline", "sister", "call", "rent", "job", "lost", "hope", "maybe", "tomorrow",
    "okay", "grief", "moving", "understand", "sounds", "hard", "happened", "next", "you", "can", "work", "friend",
    "sleep", "worried", "talk", "help", "plan", "week", "family", "money", "alone", "better", "try",
];

pub const SCENES: &[&str] = &["Academic Stress", "Job Crisis", "Breakups or Divorce", "Depression"];

fn sentence(rng: &mut ChaCha8Rng, tag: usize) -> String {
    let n = rng.random_range(8..30);
    let mut words: Vec<String> = (0..n).map(|_| WORDS.choose(rng).unwrap().to_string()).collect();
    words.push(format!("m{tag}"));
    words.join(" ")
}

/// One dialogue with `turns` alternating utterances.
pub fn dialogue(rng: &mut ChaCha8Rng, scene: &str, turns: usize, tag: usize) -> Dialogue {
    let content = (0..turns)
        .map(|i| {
            let text = sentence(rng, tag * 100 + i);
            if i % 2 == 0 {
                Utterance::user(text)
            } else {
                Utterance::ai(*Strategy::ALL.choose(rng).unwrap(), text)
            }
        })
        .collect();
    Dialogue::new(scene, format!("bench dialogue {tag}"), content)
}

/// `n` dialogues of about 18 utterances spread over [`SCENES`].
pub fn corpus(n: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = (0..n)
        .map(|i| {
            let turns = rng.random_range(12..25);
            dialogue(&mut rng, SCENES[i % SCENES.len()], turns, i)
        })
        .collect();
    Corpus::from_dialogues(ds).expect("tags keep ids unique")
}

/// Candidate/reference pairs of `len` tokens.
pub fn pairs(n: usize, len: usize, seed: u64) -> (Vec<TokenSeq>, Vec<TokenSeq>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = || {
        (0..n)
            .map(|_| tokenize(&(0..len).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" ")))
            .collect()
    };
    (side(), side())
}
