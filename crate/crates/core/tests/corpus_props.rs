mod common;

use proptest::prelude::*;

use common::{arb_corpus, arb_dialogue};
use supportloop_core::corpus::{corpus_to_string, parse_corpus_text, LoadOptions};
use supportloop_core::{parse_dialogue, serialize_dialogue, Strategy};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn parse_inverts_serialize(d in arb_dialogue()) {
        let text = serialize_dialogue(&d).unwrap();
        let back = parse_dialogue(&text).unwrap();
        prop_assert_eq!(&back, &d);
        prop_assert_eq!(serialize_dialogue(&back).unwrap(), text);
    }

    #[test]
    fn corpus_text_is_deterministic_and_lossless(c in arb_corpus(12)) {
        let a = corpus_to_string(&c).unwrap();
        prop_assert_eq!(&a, &corpus_to_string(&c).unwrap());
        let loaded = parse_corpus_text(&a, LoadOptions::default()).unwrap();
        prop_assert!(loaded.errors.is_empty());
        prop_assert_eq!(&loaded.corpus, &c);
    }

    #[test]
    fn loaded_strategies_are_registered(d in arb_dialogue(), label in "[A-Za-z ]{1,20}") {
        // Replace the first AI label with an arbitrary string: either it is a
        // registered name or abbreviation, or the record is rejected.
        let text = serialize_dialogue(&d).unwrap();
        let Some(first) = d.content.iter().find_map(|u| u.strategy) else { return Ok(()) };
        let needle = format!("\"AI Strategy\":\"{}\"", first.name());
        let mutated = text.replacen(&needle, &format!("\"AI Strategy\":{}", serde_json::json!(label)), 1);
        let known = Strategy::ALL.iter().any(|s| s.name() == label || s.abbreviation() == label);
        match parse_dialogue(&mutated) {
            Ok(p) => {
                prop_assert!(known);
                prop_assert!(p.content.iter().all(|u| u.strategy.is_none_or(|s| Strategy::ALL.contains(&s))));
            }
            Err(e) => {
                prop_assert!(!known);
                prop_assert_eq!(e.code(), "UnknownStrategy");
            }
        }
    }
}
