//! Generators shared by the integration tests.
#![allow(dead_code)]

use proptest::prelude::{any, prop, Strategy as Gen};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use supportloop_core::{Corpus, Dialogue, Provenance, ScenarioRegistry, Speaker, Strategy, Utterance};

/// Mixed vocabulary: plain words, punctuation, quoting and non-ASCII.
pub const VOCAB: &[&str] = &[
    "I", "feel", "so", "tired", "exam", "deadline", "my", "sister", "won't", "call", "back,", "really?", "\"fine\"",
    "naïve", "café", "😊", "back\\slash", "rent", "job", "lost", "hope", "maybe", "tomorrow.", "it's", "okay!",
    "grief", "moving", "again", "understand", "that", "sounds", "hard", "what", "happened", "next", "you", "can",
];

pub fn arb_text() -> impl Gen<Value = String> {
    prop::collection::vec(prop::sample::select(VOCAB), 1..12).prop_map(|w| w.join(" "))
}

pub fn arb_strategy() -> impl Gen<Value = Strategy> {
    prop::sample::select(Strategy::ALL.to_vec())
}

pub fn scene_names() -> Vec<String> {
    let mut names: Vec<String> = ScenarioRegistry::canonical().iter().map(|s| s.name.clone()).collect();
    names.push("Custom Non-Canonical Scene".into());
    names
}

pub fn arb_utterance() -> impl Gen<Value = Utterance> {
    (any::<bool>(), arb_strategy(), arb_text()).prop_map(|(ai, s, text)| {
        if ai {
            Utterance::ai(s, text)
        } else {
            Utterance::user(text)
        }
    })
}

/// Any dialogue satisfying the data-model invariants, including runs of
/// same-speaker turns.
pub fn arb_dialogue() -> impl Gen<Value = Dialogue> {
    (
        prop::sample::select(scene_names()),
        prop::collection::vec(prop::sample::select(VOCAB), 0..8),
        arb_text(),
        prop::collection::vec(arb_utterance(), 1..14),
        prop::sample::select(vec![Provenance::Seed, Provenance::Generated, Provenance::Edited]),
        0u32..5,
    )
        .prop_map(|(scene, desc, first, rest, provenance, iteration)| {
            let mut content = vec![Utterance::user(first)];
            content.extend(rest);
            let mut d = Dialogue::new(scene, desc.join(" "), content);
            d.provenance = provenance;
            d.iteration = iteration;
            d
        })
}

/// Corpus of distinct dialogues (duplicates by id are dropped).
pub fn arb_corpus(max: usize) -> impl Gen<Value = Corpus> {
    prop::collection::vec(arb_dialogue(), 1..max).prop_map(|ds| {
        let mut c = Corpus::new();
        for d in ds {
            if !c.contains(&d.id) {
                c.push(d).unwrap();
            }
        }
        c
    })
}

/// Seeded dialogue with alternating turns and `turns` utterances.
pub fn random_dialogue(rng: &mut ChaCha8Rng, scene: &str, turns: usize, tag: usize) -> Dialogue {
    let mut content = Vec::with_capacity(turns);
    for i in 0..turns {
        let n = rng.random_range(3..10);
        let mut words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
        let marker = format!("t{tag}x{i}");
        words.push(&marker);
        let text = words.join(" ");
        if i % 2 == 0 {
            content.push(Utterance::user(text));
        } else {
            content.push(Utterance::ai(*Strategy::ALL.choose(rng).unwrap(), text));
        }
    }
    Dialogue::new(scene, format!("synthetic dialogue {tag}"), content)
}

/// `n` dialogues spread round-robin over `scenes`, reproducible from `seed`.
pub fn synthetic_corpus(n: usize, scenes: &[&str], seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ds = (0..n)
        .map(|i| {
            let turns = rng.random_range(2..16);
            random_dialogue(&mut rng, scenes[i % scenes.len()], turns, i)
        })
        .collect();
    Corpus::from_dialogues(ds).unwrap()
}

pub fn ai_utterances(c: &Corpus) -> usize {
    c.iter().flat_map(|d| &d.content).filter(|u| u.speaker == Speaker::Ai).count()
}
