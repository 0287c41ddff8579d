use proptest::prelude::*;

use supportloop_core::metrics::{
    bleu_n, distinct_n, evaluate, lcs_len, meteor_stats, rouge_l, sentence_bleu, vector_extrema, EmbeddingTable,
};
use supportloop_core::text::TokenSeq;

/// Quadratic dynamic-programming LCS.
fn dp_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            t[i + 1][j + 1] = if a[i] == b[j] { t[i][j] + 1 } else { t[i][j + 1].max(t[i + 1][j]) };
        }
    }
    t[a.len()][b.len()]
}

fn seq(tokens: &[u8]) -> TokenSeq {
    TokenSeq::from_tokens(tokens.iter().map(|t| format!("w{t}")))
}

fn arb_seq(alphabet: u8, max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0..alphabet, 1..max_len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn lcs_matches_dp(a in arb_seq(6, 40), b in arb_seq(6, 40)) {
        let (x, y) = (seq(&a), seq(&b));
        prop_assert_eq!(lcs_len(x.tokens(), y.tokens()), dp_lcs(x.tokens(), y.tokens()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lcs_matches_dp_past_word_boundary(a in arb_seq(4, 200), b in arb_seq(4, 200)) {
        let (x, y) = (seq(&a), seq(&b));
        prop_assert_eq!(lcs_len(x.tokens(), y.tokens()), dp_lcs(x.tokens(), y.tokens()));
    }

    #[test]
    fn scores_lie_in_unit_interval(a in arb_seq(8, 20), b in arb_seq(8, 20)) {
        let (x, y) = (seq(&a), seq(&b));
        let r = rouge_l(&x, &y).unwrap();
        for v in [r.precision, r.recall, r.f] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let m = meteor_stats(&x, &y).unwrap();
        prop_assert!((0.0..=1.0).contains(&m.score));
        for n in 1..=4 {
            let s = sentence_bleu(&x, &y, n);
            prop_assert!((0.0..=1.0).contains(&s));
            let c = bleu_n(std::slice::from_ref(&x), std::slice::from_ref(&y), n).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn identical_pairs_score_maximally(a in arb_seq(8, 20)) {
        let x = seq(&a);
        prop_assert_eq!(rouge_l(&x, &x).unwrap().f, 1.0);
        let m = meteor_stats(&x, &x).unwrap();
        let len = x.len() as f64;
        prop_assert!((m.score - (1.0 - 0.5 / len.powi(3))).abs() < 1e-12);
        if x.len() >= 2 {
            prop_assert!(m.score > 0.9);
        }
        for n in 1..=x.len().min(4) {
            prop_assert!((bleu_n(std::slice::from_ref(&x), std::slice::from_ref(&x), n).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn distinct_ignores_order(responses in prop::collection::vec(arb_seq(10, 12), 1..10), n in 1usize..4, rot in 0usize..10) {
        let seqs: Vec<TokenSeq> = responses.iter().map(|r| seq(r)).collect();
        let mut permuted = seqs.clone();
        permuted.reverse();
        let len = permuted.len();
        permuted.rotate_left(rot % len);
        match (distinct_n(&seqs, n), distinct_n(&permuted, n)) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(a, b);
                prop_assert!(a > 0.0 && a <= 1.0);
            }
            (Err(_), Err(_)) => {}
            other => prop_assert!(false, "inconsistent: {other:?}"),
        }
    }

    #[test]
    fn extrema_bounds(a in arb_seq(6, 10), b in arb_seq(6, 10), vectors in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 3), 6)) {
        let mut table = EmbeddingTable::new();
        for (i, v) in vectors.iter().enumerate() {
            table.insert(format!("w{i}"), v.clone()).unwrap();
        }
        let (x, y) = (seq(&a), seq(&b));
        let v = vector_extrema(&x, &y, &table).unwrap();
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        let same = vector_extrema(&x, &x, &table).unwrap();
        let nonzero = table.extrema_vector(&x).unwrap().iter().any(|c| *c != 0.0);
        if nonzero {
            prop_assert!((same - 1.0).abs() < 1e-9);
        }
        let mut positive = EmbeddingTable::new();
        for (i, v) in vectors.iter().enumerate() {
            positive.insert(format!("w{i}"), v.iter().map(|c| c.abs()).collect()).unwrap();
        }
        let p = vector_extrema(&x, &y, &positive).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&p));
    }

    #[test]
    fn report_fields_in_range(pairs in prop::collection::vec((arb_seq(8, 12), arb_seq(8, 12)), 1..8)) {
        let c: Vec<TokenSeq> = pairs.iter().map(|(a, _)| seq(a)).collect();
        let r: Vec<TokenSeq> = pairs.iter().map(|(_, b)| seq(b)).collect();
        let rep = evaluate(&c, &r, None).unwrap();
        prop_assert_eq!(rep.pairs, pairs.len());
        for v in [rep.meteor, rep.bleu2, rep.bleu4, rep.rouge_l, rep.distinct1, rep.distinct2, rep.distinct3] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(rep.extrema.is_none());
    }
}
