//! Acceptance suite: one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines are always visible; exits non-zero on FAIL.
//!
//! The released-corpus check reads the file named by `EXTES_PATH` and is
//! reported as SKIP when the variable is unset.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use proptest::strategy::{Strategy as _, ValueTree};
use proptest::test_runner::TestRunner;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{ai_utterances, arb_dialogue, random_dialogue, synthetic_corpus};
use supportloop_core::analysis::{
    corpus_stats, fleiss_kappa, phase_distribution, transition_stats, Kappa,
};
use supportloop_core::corpus::format::record_json;
use supportloop_core::curation::{read_events, run_iteration, IterationState, LoopConfig, QuotaConfig, StateDir};
use supportloop_core::export::{export_sft, strip_strategy_prefix, write_sft_jsonl, SftExample};
use supportloop_core::generation::backend::scenario_slug;
use supportloop_core::generation::{Gateway, GatewayConfig};
use supportloop_core::metrics::{bleu_n, distinct_n, lcs_len, meteor, rouge_l};
use supportloop_core::safety::{audit_corpus, score_utterance, AuditOptions, StubScorer, ATTRIBUTES};
use supportloop_core::corpus::strategy::REFERENCE_LABEL_TOTAL;
use supportloop_core::corpus::{load_corpus_with, LabelMatching, LoadOptions};
use supportloop_core::{parse_dialogue, serialize_dialogue, tokenize, Corpus, Dialogue, Strategy, TokenSeq, Utterance};

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Check = Result<String, String>;

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    match (result, limit) {
        (Err(e), _) => Outcome::Fail(format!("{e} ({elapsed:.2?})")),
        (Ok(msg), Some(limit)) if elapsed > limit => {
            Outcome::Fail(format!("{msg}; took {elapsed:.2?}, limit {limit:?}"))
        }
        (Ok(msg), _) => Outcome::Pass(format!("{msg} ({elapsed:.2?})")),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), String> {
    ensure((a - b).abs() <= tol, || format!("{what}: {a} is not within {tol} of {b}"))
}

fn round_trip() -> Check {
    let mut runner = TestRunner::deterministic();
    let gen = arb_dialogue();
    for i in 0..1000 {
        let d = gen.new_tree(&mut runner).map_err(|e| e.to_string())?.current();
        let first = serialize_dialogue(&d).map_err(|e| format!("dialogue {i}: {e}"))?;
        let parsed = parse_dialogue(&first).map_err(|e| format!("dialogue {i}: {e}"))?;
        let second = serialize_dialogue(&parsed).map_err(|e| format!("dialogue {i}: {e}"))?;
        ensure(first == second, || format!("dialogue {i} is not byte-identical after a round trip"))?;
        ensure(parsed == d, || format!("dialogue {i} changed structurally"))?;
    }
    let fixtures = [
        ("missing strategy", r#"{"scene":"Job Crisis","description":"d","content":[{"User":"hi"},{"AI":"hello"}]}"#),
        ("bad speaker key", r#"{"scene":"Job Crisis","description":"d","content":[{"Usr":"hi"}]}"#),
        ("empty text", r#"{"scene":"Job Crisis","description":"d","content":[{"User":"  "}]}"#),
    ];
    for (name, text) in fixtures {
        match parse_dialogue(text) {
            Ok(_) => return Err(format!("{name} fixture parsed")),
            Err(e) => ensure(e.code() == "MalformedRecord", || format!("{name}: got {}", e.code()))?,
        }
    }
    Ok("1000 dialogues byte-identical; 3 malformed fixtures give MalformedRecord".into())
}

fn released_data(path: PathBuf) -> Check {
    let options = LoadOptions { max_error_ratio: 1.0, matching: LabelMatching::Lenient };
    let loaded = load_corpus_with(&path, options).map_err(|e| e.to_string())?;
    let c = loaded.corpus;
    let s = corpus_stats(&c).map_err(|e| e.to_string())?;
    let mut failures = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            failures.push(msg);
        }
    };
    check(loaded.errors.is_empty(), format!("{} records failed to load", loaded.errors.len()));
    check(s.n_dialogues == 11_177, format!("dialogues {}", s.n_dialogues));
    check(s.n_utterances == 200_393, format!("utterances {}", s.n_utterances));
    check((s.avg_dialogue_len - 18.2).abs() <= 0.05, format!("avg dialogue length {:.3}", s.avg_dialogue_len));
    check((s.avg_utterance_len - 26.0).abs() <= 0.5, format!("avg utterance length {:.3}", s.avg_utterance_len));
    let labels: u64 = s.strategies.iter().map(|r| r.count).sum();
    check(labels == REFERENCE_LABEL_TOTAL, format!("strategy labels {labels}"));
    for (row, strategy) in s.strategies.iter().zip(Strategy::ALL) {
        let expected = strategy.info().reference_count as f64 / REFERENCE_LABEL_TOTAL as f64;
        let got = row.count as f64 / labels.max(1) as f64;
        check((got - expected).abs() <= 0.001, format!("{} share {:.4} vs {:.4}", strategy.abbreviation(), got, expected));
    }
    let t = transition_stats(&c, 3).map_err(|e| e.to_string())?;
    let abbrev = |e: &supportloop_core::analysis::TransitionEntry| {
        e.window.sequence.iter().map(|s| s.abbreviation()).collect::<Vec<_>>().join("→")
    };
    let top5: BTreeSet<String> = t.entries.iter().take(5).map(abbrev).collect();
    let expected: BTreeSet<String> =
        ["EV→RS→EV", "EV→RS→SO", "EV→RS→ES", "RS→EV→SO", "EV→ES→RS"].iter().map(|s| s.to_string()).collect();
    match t.entries.first() {
        Some(top) => check(
            abbrev(top) == "EV→RS→EV" && (top.per_mille - 17.19).abs() <= 0.5,
            format!("top 3-hop {} at {:.2}‰", abbrev(top), top.per_mille),
        ),
        None => check(false, "no 3-hop windows".into()),
    }
    check(top5 == expected, format!("top-5 3-hop set {top5:?}"));
    if failures.is_empty() {
        Ok(format!("{} dialogues, {} utterances, {labels} labels", s.n_dialogues, s.n_utterances))
    } else {
        Err(failures.join("; "))
    }
}

fn dp_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 0..a.len() {
        for j in 0..b.len() {
            t[i + 1][j + 1] = if a[i] == b[j] { t[i][j] + 1 } else { t[i][j + 1].max(t[i + 1][j]) };
        }
    }
    t[a.len()][b.len()]
}

/// Best (matches, chunks) over every one-to-one exact alignment.
fn brute_alignment(c: &[String], r: &[String]) -> (usize, usize) {
    fn go(i: usize, c: &[String], r: &[String], used: &mut Vec<bool>, pairs: &mut Vec<(usize, usize)>, best: &mut (usize, usize)) {
        if i == c.len() {
            let m = pairs.len();
            let chunks = pairs.windows(2).filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1)).count()
                + usize::from(m > 0);
            if m > best.0 || (m == best.0 && chunks < best.1) {
                *best = (m, chunks);
            }
            return;
        }
        go(i + 1, c, r, used, pairs, best);
        for j in 0..r.len() {
            if !used[j] && c[i] == r[j] {
                used[j] = true;
                pairs.push((i, j));
                go(i + 1, c, r, used, pairs, best);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    let mut best = (0, usize::MAX);
    go(0, c, r, &mut vec![false; r.len()], &mut Vec::new(), &mut best);
    best
}

fn meteor_oracle(c: &[String], r: &[String]) -> f64 {
    let (m, chunks) = brute_alignment(c, r);
    if m == 0 {
        return 0.0;
    }
    let m = m as f64;
    let p = m / c.len() as f64;
    let rec = m / r.len() as f64;
    let f_mean = 10.0 * p * rec / (rec + 9.0 * p);
    f_mean * (1.0 - 0.5 * (chunks as f64 / m).powi(3))
}

fn random_seq(rng: &mut ChaCha8Rng, vocab: &[&str], max: usize) -> TokenSeq {
    let n = rng.random_range(1..=max);
    tokenize(&(0..n).map(|_| *vocab.choose(rng).unwrap()).collect::<Vec<_>>().join(" "))
}

fn metrics() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let vocab = ["a", "b", "c", "d", "e", "f"];
    for i in 0..1000 {
        let c = random_seq(&mut rng, &vocab, 30);
        let r = random_seq(&mut rng, &vocab, 30);
        let l = dp_lcs(c.tokens(), r.tokens());
        ensure(lcs_len(c.tokens(), r.tokens()) == l, || format!("pair {i}: LCS differs from DP"))?;
        let s = rouge_l(&c, &r).map_err(|e| e.to_string())?;
        let (p, rec) = (l as f64 / c.len() as f64, l as f64 / r.len() as f64);
        let f = if l == 0 { 0.0 } else { 2.0 * p * rec / (p + rec) };
        ensure(s.precision == p && s.recall == rec && s.f == f, || format!("pair {i}: ROUGE-L {s:?} vs DP f={f}"))?;
    }
    let mut worst = 0.0f64;
    for i in 0..200 {
        let c = random_seq(&mut rng, &vocab[..3], 8);
        let r = random_seq(&mut rng, &vocab[..3], 8);
        let got = meteor(&c, &r).map_err(|e| e.to_string())?;
        let want = meteor_oracle(c.tokens(), r.tokens());
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() < 1e-6, || format!("pair {i}: METEOR {got} vs oracle {want}"))?;
    }

    let t = |s: &str| tokenize(s);
    let b = bleu_n(&[t("the the cat")], &[t("the cat")], 2).map_err(|e| e.to_string())?;
    close(b, (1.0f64 / 3.0).sqrt(), 1e-3, "BLEU-2 hand example")?;
    close(b, 0.577, 1e-3, "BLEU-2 hand example")?;

    let same = [t("the cat sat on the mat")];
    ensure(bleu_n(&same, &same, 4).unwrap() == 1.0, || "BLEU identity".into())?;
    ensure(bleu_n(&[t("a b c")], &[t("x y z")], 2).unwrap() == 0.0, || "BLEU zero overlap".into())?;
    let r = rouge_l(&t("a b c"), &t("a b c")).unwrap();
    ensure(r.precision == 1.0 && r.recall == 1.0 && r.f == 1.0, || "ROUGE-L identity".into())?;
    ensure(rouge_l(&t("a b"), &t("c d")).unwrap().f == 0.0, || "ROUGE-L disjoint".into())?;
    let r = rouge_l(&t("a b c d"), &t("a c d")).unwrap();
    ensure(r.precision == 0.75 && r.recall == 1.0, || format!("ROUGE-L hand example {r:?}"))?;
    close(r.f, 6.0 / 7.0, 1e-12, "ROUGE-L hand example")?;
    ensure(meteor(&t("the cat"), &t("the cat")).unwrap() == 0.9375, || "METEOR \"the cat\" identity".into())?;
    ensure(meteor(&t("a b"), &t("c d")).unwrap() == 0.0, || "METEOR disjoint".into())?;
    ensure(distinct_n(&[t("a b c"), t("a b d")], 2).unwrap() == 0.75, || "Distinct-2 hand example".into())?;
    close(distinct_n(&[t("a b c"), t("a b d")], 1).unwrap(), 4.0 / 6.0, 1e-12, "Distinct-1 hand example")?;
    ensure(distinct_n(&[t("z z z z")], 1).unwrap() == 0.25, || "Distinct-1 repeated token".into())?;
    ensure(distinct_n(&[t("a b"), t("c d")], 1).unwrap() == 1.0, || "Distinct-1 all unique".into())?;
    Ok(format!("1000 ROUGE-L pairs exact; 200 METEOR pairs max |Δ| = {worst:.1e}; BLEU-2 = {b:.4}"))
}

fn analysis() -> Check {
    let c = synthetic_corpus(120, &["Academic Stress", "Job Crisis", "Depression"], 5);
    let ai = ai_utterances(&c) as u64;
    for bins in [1, 2, 4, 7] {
        let m = phase_distribution(&c, bins).map_err(|e| e.to_string())?;
        ensure(m.total() == ai, || format!("{bins} bins hold {} of {ai} AI utterances", m.total()))?;
    }
    for hops in 3..=5 {
        let t = transition_stats(&c, hops).map_err(|e| e.to_string())?;
        let sum: f64 = t.entries.iter().map(|e| e.per_mille).sum();
        close(sum, 1000.0, 1e-6, &format!("{hops}-hop proportions"))?;
    }
    let k = fleiss_kappa(&[vec![2, 0], vec![1, 1]]).map_err(|e| e.to_string())?;
    let Kappa::Value(k) = k else { return Err("hand example kappa undefined".into()) };
    close(k, -1.0 / 3.0, 1e-9, "kappa hand example")?;
    let perfect = fleiss_kappa(&[vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3]]).map_err(|e| e.to_string())?;
    ensure(perfect == Kappa::Value(1.0), || format!("perfect agreement gives {perfect:?}"))?;
    Ok(format!("{ai} AI utterances partitioned; 3-5 hop sums = 1000‰; κ = {k:.6}"))
}

const LOOP_SCENES: [&str; 3] = ["Academic Stress", "Breakups or Divorce", "Job Crisis"];

fn end_to_end() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let fixtures = tmp.path().join("fixtures");
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut malformed = 0;
    let mut total = 0;
    for (s, scene) in LOOP_SCENES.iter().enumerate() {
        let dir = fixtures.join(scenario_slug(scene));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        let mut lines = Vec::new();
        for k in 0..20 {
            total += 1;
            if k % 10 == 3 {
                malformed += 1;
                lines.push(r#"{"scene": "truncated", "content": [{"User": "#.to_string());
            } else {
                lines.push(record_json(&random_dialogue(&mut rng, scene, 8, 1000 + s * 100 + k)));
            }
        }
        std::fs::write(dir.join("responses.jsonl"), lines.join("\n")).map_err(|e| e.to_string())?;
    }

    let state_dir = StateDir::new(tmp.path().join("state"));
    let quotas = QuotaConfig { targets: LOOP_SCENES.iter().map(|s| (s.to_string(), 20)).collect() };
    state_dir.write_quotas(&quotas).map_err(|e| e.to_string())?;
    let mut state = state_dir.open().map_err(|e| e.to_string())?;
    state.set_targets(&quotas);
    for (s, scene) in LOOP_SCENES.iter().enumerate() {
        for k in 0..3 {
            state.import_seed(random_dialogue(&mut rng, scene, 8, s * 10 + k), "acceptance").map_err(|e| e.to_string())?;
        }
    }
    let gateway = Gateway::mock(&fixtures, GatewayConfig { api_key_env: None, ..GatewayConfig::default() })
        .map_err(|e| e.to_string())?;
    let cfg = LoopConfig { batch_size: 24, ..LoopConfig::default() };

    let mut rejected = 0;
    for _ in 0..2 {
        let pool_before = state.pool().len();
        let report = run_iteration(&mut state, &gateway, &cfg).map_err(|e| e.to_string())?;
        ensure(report.generated == report.accepted + report.queued + report.rejected, || {
            format!("iteration {}: {} generated vs {}+{}+{}", report.iteration, report.generated, report.accepted, report.queued, report.rejected)
        })?;
        for s in &report.scenarios {
            ensure(s.generated == s.accepted + s.queued + s.rejected, || format!("{} does not conserve", s.scenario))?;
        }
        ensure(state.pool().len() > pool_before, || format!("pool stayed at {pool_before}"))?;
        rejected += report.rejected;
        state_dir.snapshot(&state).map_err(|e| e.to_string())?;
    }
    ensure(rejected > 0, || "no malformed response was rejected".into())?;

    let events = read_events(&state_dir.events_path()).map_err(|e| e.to_string())?;
    ensure(events.as_slice() == state.audit(), || "persisted log differs from the in-memory audit".into())?;
    let replayed = IterationState::replay(events).map_err(|e| e.to_string())?;
    let ids = |s: &IterationState| s.corpus().ids().cloned().collect::<Vec<_>>();
    ensure(ids(&replayed) == ids(&state), || "replayed corpus membership differs".into())?;
    ensure(replayed.same_contents(&state), || "replayed ledger differs".into())?;
    let reopened = state_dir.open().map_err(|e| e.to_string())?;
    ensure(ids(&reopened) == ids(&state), || "reopened state differs".into())?;
    Ok(format!(
        "{malformed}/{total} malformed fixtures, {rejected} rejected; pool {} entries; corpus {} after replay",
        state.pool().len(),
        replayed.corpus().len()
    ))
}

fn export() -> Check {
    let c = synthetic_corpus(50, &["Academic Stress", "Job Crisis"], 9);
    let mut with = Vec::new();
    let mut without = Vec::new();
    let n = write_sft_jsonl(&mut with, &c, true).map_err(|e| e.to_string())?;
    write_sft_jsonl(&mut without, &c, false).map_err(|e| e.to_string())?;
    let mut stripped = Vec::new();
    for line in String::from_utf8(with).map_err(|e| e.to_string())?.lines() {
        let mut e: SftExample = serde_json::from_str(line).map_err(|e| e.to_string())?;
        e.target = strip_strategy_prefix(&e.target).to_string();
        serde_json::to_writer(&mut stripped, &e).map_err(|e| e.to_string())?;
        stripped.push(b'\n');
    }
    ensure(stripped == without, || "stripped strategies export differs from the plain export".into())?;
    ensure(n == ai_utterances(&c), || format!("{n} examples for {} AI utterances", ai_utterances(&c)))?;
    ensure(export_sft(&c, false).count() == n, || "streamed count differs".into())?;
    Ok(format!("{n} examples, byte-identical after stripping"))
}

fn toxicity_fixture() -> Corpus {
    let lines = [
        ("this damn exam is killing me", "That sounds really hard on you."),
        ("my boss called me an idiot and a loser", "Being insulted like that hurts."),
        ("I just feel tired all the time", "Tiredness can weigh on everything."),
        ("I want to hurt the people who laughed at me", "It sounds like you are very angry."),
        ("everything is crap and I hate myself", "I'm sorry you feel this way."),
    ];
    let ds = lines
        .iter()
        .enumerate()
        .map(|(i, (u, a))| {
            Dialogue::new(
                "Job Crisis",
                format!("fixture {i}"),
                vec![Utterance::user(*u), Utterance::ai(Strategy::EmotionalValidation, *a), Utterance::user("thanks")],
            )
        })
        .collect();
    Corpus::from_dialogues(ds).unwrap()
}

fn toxicity() -> Check {
    let c = toxicity_fixture();
    let scorer = StubScorer::bundled();
    let a = audit_corpus(&c, &scorer, &AuditOptions { concurrency: 1, ..AuditOptions::default() }).map_err(|e| e.to_string())?;
    let b = audit_corpus(&c, &scorer, &AuditOptions { concurrency: 4, ..AuditOptions::default() }).map_err(|e| e.to_string())?;
    ensure(a == b, || "audit differs between runs".into())?;

    let scores: Vec<[f64; 6]> = c
        .iter()
        .flat_map(|d| &d.content)
        .map(|u| score_utterance(&u.text, &scorer).map(|s| s.values()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let means = a.means.values();
    let mut nonzero = HashSet::new();
    for (k, name) in ATTRIBUTES.iter().enumerate() {
        let col: Vec<f64> = scores.iter().map(|s| s[k]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        close(means[k], mean, 1e-12, &format!("{name} mean"))?;
        ensure(lo <= means[k] && means[k] <= hi, || format!("{name}: mean {} outside [{lo}, {hi}]", means[k]))?;
        if hi > 0.0 {
            nonzero.insert(*name);
        }
    }
    ensure(!nonzero.is_empty(), || "fixture triggers no attribute".into())?;
    Ok(format!("{} utterances, {} attributes triggered, means identical across runs", a.utterances, nonzero.len()))
}

fn main() {
    let list_only = std::env::args().any(|a| a == "--list");
    if list_only {
        return;
    }
    let released = std::env::var_os("EXTES_PATH").map(PathBuf::from);
    let results = [
        ("corpus round-trip", timed(Some(Duration::from_secs(5)), round_trip)),
        (
            "released-data reproduction",
            match released {
                Some(p) if p.is_file() => timed(Some(Duration::from_secs(120)), || released_data(p)),
                Some(p) => Outcome::Skip(format!("EXTES_PATH={} is not a file", p.display())),
                None => Outcome::Skip("EXTES_PATH not set; released corpus unavailable".into()),
            },
        ),
        ("metrics oracles", timed(Some(Duration::from_secs(30)), metrics)),
        ("analysis properties", timed(None, analysis)),
        ("end-to-end mock loop", timed(Some(Duration::from_secs(20)), end_to_end)),
        ("export invariants", timed(None, export)),
        ("toxicity stub audit", timed(None, toxicity)),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Outcome::Pass(m) => println!("PASS  {name}: {m}"),
            Outcome::Fail(m) => {
                failed += 1;
                println!("FAIL  {name}: {m}");
            }
            Outcome::Skip(m) => println!("SKIP  {name}: {m}"),
        }
    }
    println!("acceptance: {} passed, {failed} failed", results.iter().filter(|r| matches!(r.1, Outcome::Pass(_))).count());
    if failed > 0 {
        std::process::exit(1);
    }
}
