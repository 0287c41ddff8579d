use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DialogueId, Speaker};

use super::{score_utterance, SafetyError, ToxicityScorer, ToxicityScores, ATTRIBUTES};

#[derive(Debug, Clone)]
pub struct AuditOptions {
    /// Score only this speaker's utterances; `None` scores everything.
    pub speaker: Option<Speaker>,
    pub concurrency: usize,
    /// Line-delimited scores already obtained; new scores are appended.
    pub progress: Option<PathBuf>,
}

impl Default for AuditOptions {
    fn default() -> Self {
        Self { speaker: None, concurrency: 4, progress: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceScore {
    pub dialogue_id: DialogueId,
    pub turn: usize,
    pub scores: ToxicityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeMax {
    pub attribute: String,
    pub dialogue_id: DialogueId,
    pub turn: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueMax {
    pub dialogue_id: DialogueId,
    /// Per attribute, the highest utterance score in the dialogue.
    pub scores: ToxicityScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityAudit {
    pub utterances: usize,
    /// Scores taken from the progress file instead of the scorer.
    pub resumed: usize,
    pub means: ToxicityScores,
    pub maxima: Vec<AttributeMax>,
    pub dialogue_maxima: Vec<DialogueMax>,
}

impl ToxicityAudit {
    /// One `attribute mean` row per attribute.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<16} {:>8}\n", "attribute", "mean");
        for (name, v) in ATTRIBUTES.iter().zip(self.means.values()) {
            out.push_str(&format!("{name:<16} {v:>8.4}\n"));
        }
        out
    }
}

fn read_progress(path: &Path) -> Result<HashMap<(DialogueId, usize), ToxicityScores>, SafetyError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(HashMap::new()),
        Err(source) => return Err(SafetyError::Io { path: path.display().to_string(), source }),
    };
    let mut done = HashMap::new();
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|source| SafetyError::Io { path: path.display().to_string(), source })?;
    let last = lines.len();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<UtteranceScore>(line) {
            Ok(u) => {
                done.insert((u.dialogue_id, u.turn), u.scores);
            }
            // An interrupted append leaves a partial last line.
            Err(_) if i + 1 == last => log::warn!("{}: ignoring partial last line", path.display()),
            Err(e) => return Err(SafetyError::Corrupt { line: i + 1, message: e.to_string() }),
        }
    }
    Ok(done)
}

/// Scores every selected utterance and aggregates per-attribute means over
/// utterances, per-attribute worst utterances and per-dialogue maxima.
///
/// Blank utterances are skipped. On a scorer error the audit stops and the
/// error names the utterance; with a progress file, a rerun picks up where
/// it stopped.
pub fn audit_corpus(
    corpus: &Corpus,
    scorer: &dyn ToxicityScorer,
    options: &AuditOptions,
) -> Result<ToxicityAudit, SafetyError> {
    let work: Vec<(&DialogueId, usize, &str)> = corpus
        .iter()
        .flat_map(|d| {
            d.content
                .iter()
                .enumerate()
                .filter(|(_, u)| options.speaker.is_none_or(|s| s == u.speaker))
                .filter(|(_, u)| !u.text.trim().is_empty())
                .map(move |(i, u)| (&d.id, i, u.text.as_str()))
        })
        .collect();
    if work.is_empty() {
        return Err(SafetyError::EmptyCorpus);
    }

    let done = match &options.progress {
        Some(p) => read_progress(p)?,
        None => HashMap::new(),
    };
    let mut sink = match &options.progress {
        Some(p) => Some(
            OpenOptions::new()
                .create(true)
                .append(true)
                .open(p)
                .map_err(|source| SafetyError::Io { path: p.display().to_string(), source })?,
        ),
        None => None,
    };
    // Terminate a partial last line so appends start cleanly.
    if let (Some(file), Some(p)) = (sink.as_mut(), &options.progress) {
        let bytes = std::fs::read(p).unwrap_or_default();
        if bytes.last().is_some_and(|&b| b != b'\n') {
            let _ = file.write_all(b"\n");
        }
    }

    let results: Vec<Mutex<Option<ToxicityScores>>> = work
        .iter()
        .map(|(id, turn, _)| Mutex::new(done.get(&((*id).clone(), *turn)).copied()))
        .collect();
    let resumed = results.iter().filter(|r| r.lock().unwrap().is_some()).count();
    let todo: Vec<usize> = (0..work.len()).filter(|&i| results[i].lock().unwrap().is_none()).collect();
    let next = AtomicUsize::new(0);
    let stop = AtomicBool::new(false);
    let first_error: Mutex<Option<(usize, SafetyError)>> = Mutex::new(None);
    let sink = Mutex::new(sink);

    std::thread::scope(|scope| {
        for _ in 0..options.concurrency.clamp(1, todo.len().max(1)) {
            scope.spawn(|| loop {
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                let k = next.fetch_add(1, Ordering::SeqCst);
                let Some(&i) = todo.get(k) else { break };
                let (id, turn, text) = work[i];
                match score_utterance(text, scorer) {
                    Ok(scores) => {
                        *results[i].lock().unwrap() = Some(scores);
                        if let Some(file) = sink.lock().unwrap().as_mut() {
                            let line = serde_json::to_string(&UtteranceScore { dialogue_id: id.clone(), turn, scores })
                                .expect("scores serialize");
                            if let Err(e) = writeln!(file, "{line}") {
                                log::warn!("progress file write failed: {e}");
                            }
                        }
                    }
                    Err(e) => {
                        stop.store(true, Ordering::SeqCst);
                        let mut slot = first_error.lock().unwrap();
                        if slot.as_ref().is_none_or(|(j, _)| i < *j) {
                            *slot = Some((i, e));
                        }
                        break;
                    }
                }
            });
        }
    });

    if let Some((i, e)) = first_error.into_inner().unwrap() {
        let (id, turn, _) = work[i];
        return Err(SafetyError::At { dialogue_id: id.to_string(), turn, source: Box::new(e) });
    }

    let scores: Vec<ToxicityScores> = results
        .into_iter()
        .map(|r| r.into_inner().unwrap().expect("every utterance scored"))
        .collect();
    let n = scores.len() as f64;
    let mut sums = [0.0; 6];
    let mut best: [Option<(usize, f64)>; 6] = [None; 6];
    let mut per_dialogue: BTreeMap<&DialogueId, [f64; 6]> = BTreeMap::new();
    for (i, s) in scores.iter().enumerate() {
        let values = s.values();
        let dmax = per_dialogue.entry(work[i].0).or_insert([0.0; 6]);
        for a in 0..6 {
            sums[a] += values[a];
            dmax[a] = dmax[a].max(values[a]);
            if best[a].is_none_or(|(_, v)| values[a] > v) {
                best[a] = Some((i, values[a]));
            }
        }
    }
    let means = ToxicityScores::new(sums.map(|s| (s / n).clamp(0.0, 1.0)))?;
    let maxima = ATTRIBUTES
        .iter()
        .zip(best)
        .filter_map(|(a, b)| b.map(|(i, score)| (a, i, score)))
        .map(|(a, i, score)| AttributeMax {
            attribute: a.to_string(),
            dialogue_id: work[i].0.clone(),
            turn: work[i].1,
            score,
        })
        .collect();
    let dialogue_maxima = per_dialogue
        .into_iter()
        .map(|(id, v)| Ok(DialogueMax { dialogue_id: id.clone(), scores: ToxicityScores::new(v)? }))
        .collect::<Result<_, SafetyError>>()?;
    Ok(ToxicityAudit { utterances: scores.len(), resumed, means, maxima, dialogue_maxima })
}
