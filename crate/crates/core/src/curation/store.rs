//! State directory: `events.log` (append-only, one event per line),
//! `corpus.snapshot`, `seeds.snapshot` and `quotas.toml`.
//!
//! Recovery loads the snapshots and replays the events logged after them.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{corpus_to_string, parse_corpus_text, write_atomic, LoadOptions};

use super::events::Event;
use super::quota::QuotaConfig;
use super::state::{IterationState, Ledger};
use super::CurationError;

const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug)]
pub struct EventLog {
    path: PathBuf,
    file: File,
}

impl EventLog {
    pub fn open(path: &Path) -> Result<Self, CurationError> {
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| CurationError::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, event: &Event) -> Result<(), CurationError> {
        let mut line = serde_json::to_string(event).expect("events serialize");
        line.push('\n');
        self.file
            .write_all(line.as_bytes())
            .and_then(|_| self.file.flush())
            .map_err(|e| CurationError::io(&self.path, e))
    }
}

/// Reads a log. A final line without a newline that fails to parse is a
/// torn write and is dropped; any other bad line is an error.
pub fn read_events(path: &Path) -> Result<Vec<Event>, CurationError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(CurationError::io(path, e)),
    };
    let mut events = Vec::new();
    let mut reader = BufReader::new(file);
    let mut line = String::new();
    let mut number = 0;
    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| CurationError::io(path, e))?;
        if n == 0 {
            break;
        }
        number += 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Event>(&line) {
            Ok(e) => events.push(e),
            Err(_) if !line.ends_with('\n') => {
                log::warn!("{}: dropping torn final line {number}", path.display());
            }
            Err(e) => {
                return Err(CurationError::Corrupt(format!("{}:{number}: {e}", path.display())))
            }
        }
    }
    Ok(events)
}

#[derive(Serialize, Deserialize)]
struct Snapshot {
    version: u32,
    corpus_len: usize,
    ledger: Ledger,
}

#[derive(Debug, Clone)]
pub struct StateDir {
    root: PathBuf,
}

impl StateDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn events_path(&self) -> PathBuf {
        self.root.join("events.log")
    }

    pub fn corpus_path(&self) -> PathBuf {
        self.root.join("corpus.snapshot")
    }

    pub fn seeds_path(&self) -> PathBuf {
        self.root.join("seeds.snapshot")
    }

    pub fn quotas_path(&self) -> PathBuf {
        self.root.join("quotas.toml")
    }

    /// Loads (or creates) the state and attaches the event log for appends.
    pub fn open(&self) -> Result<IterationState, CurationError> {
        fs::create_dir_all(&self.root).map_err(|e| CurationError::io(&self.root, e))?;
        let mut state = IterationState::new();
        if self.seeds_path().exists() {
            let text = fs::read_to_string(self.seeds_path())
                .map_err(|e| CurationError::io(&self.seeds_path(), e))?;
            let snap: Snapshot = serde_json::from_str(&text)
                .map_err(|e| CurationError::Corrupt(format!("seeds.snapshot: {e}")))?;
            if snap.version != SNAPSHOT_VERSION {
                return Err(CurationError::Corrupt(format!(
                    "seeds.snapshot version {} is not supported",
                    snap.version
                )));
            }
            let corpus_text = fs::read_to_string(self.corpus_path())
                .map_err(|e| CurationError::io(&self.corpus_path(), e))?;
            let mut dialogues = parse_corpus_text(&corpus_text, LoadOptions::default())
                .map_err(|e| CurationError::Corrupt(format!("corpus.snapshot: {e}")))?
                .corpus
                .into_dialogues();
            // The corpus snapshot is written first and the corpus only grows,
            // so a newer one is trimmed to the length the ledger refers to.
            if dialogues.len() < snap.corpus_len {
                return Err(CurationError::Corrupt(format!(
                    "corpus.snapshot holds {} dialogues, ledger expects {}",
                    dialogues.len(),
                    snap.corpus_len
                )));
            }
            dialogues.truncate(snap.corpus_len);
            state.corpus = crate::corpus::Corpus::from_dialogues(dialogues)
                .map_err(|e| CurationError::Corrupt(e.to_string()))?;
            state.ledger = snap.ledger;
        }
        let events = read_events(&self.events_path())?;
        let from = state.ledger.next_seq;
        for e in events.iter().filter(|e| e.seq >= from) {
            state.replay_one(e.clone())?;
        }
        state.set_audit(events);
        if self.quotas_path().exists() {
            state.set_targets(&QuotaConfig::load(&self.quotas_path())?);
        }
        state.attach_log(EventLog::open(&self.events_path())?);
        Ok(state)
    }

    pub fn write_quotas(&self, quotas: &QuotaConfig) -> Result<(), CurationError> {
        fs::create_dir_all(&self.root).map_err(|e| CurationError::io(&self.root, e))?;
        write_atomic(&self.quotas_path(), quotas.to_toml().as_bytes())
            .map_err(|e| CurationError::io(&self.quotas_path(), e))
    }

    pub fn snapshot(&self, state: &IterationState) -> Result<(), CurationError> {
        let corpus = corpus_to_string(state.corpus()).map_err(|e| CurationError::Corrupt(e.to_string()))?;
        write_atomic(&self.corpus_path(), corpus.as_bytes())
            .map_err(|e| CurationError::io(&self.corpus_path(), e))?;
        let snap = Snapshot {
            version: SNAPSHOT_VERSION,
            corpus_len: state.corpus().len(),
            ledger: state.ledger.clone(),
        };
        let body = serde_json::to_vec(&snap).expect("snapshot serializes");
        write_atomic(&self.seeds_path(), &body).map_err(|e| CurationError::io(&self.seeds_path(), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Dialogue, Strategy, Utterance};

    fn seed(tag: &str) -> Dialogue {
        Dialogue::new("Academic Stress", tag, vec![Utterance::user(tag), Utterance::ai(Strategy::Affirmation, "well done")])
    }

    #[test]
    fn recovery_from_log_and_snapshot() {
        let dir = tempfile::tempdir().unwrap();
        let store = StateDir::new(dir.path());
        {
            let mut state = store.open().unwrap();
            state.import_seed(seed("a"), "curator").unwrap();
            store.snapshot(&state).unwrap();
            state.import_seed(seed("b"), "curator").unwrap();
        }
        let state = store.open().unwrap();
        assert_eq!(state.corpus().len(), 2);
        assert_eq!(state.audit().len(), 2);
        assert_eq!(state.pool().scenario_len("Academic Stress"), 2);
        let replayed = IterationState::replay(read_events(&store.events_path()).unwrap()).unwrap();
        assert!(replayed.same_contents(&state));
    }

    #[test]
    fn scores_survive_the_log_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let store = StateDir::new(dir.path());
        let mut state = store.open().unwrap();
        let kind = crate::curation::EventKind::Generated {
            scenario: "Academic Stress".into(),
            iteration: 0,
            verdict: crate::validation::Verdict::Reject,
            issues: Vec::new(),
            duplicate_score: 0.009174311926605505,
            dialogue: None,
        };
        state.emit("loop", None, Some("r-0".into()), kind).unwrap();
        assert_eq!(read_events(&store.events_path()).unwrap(), state.audit());
    }

    #[test]
    fn torn_tail_is_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let store = StateDir::new(dir.path());
        {
            let mut state = store.open().unwrap();
            state.import_seed(seed("a"), "curator").unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(store.events_path()).unwrap();
        f.write_all(b"{\"seq\":1,\"timest").unwrap();
        assert_eq!(read_events(&store.events_path()).unwrap().len(), 1);
        fs::write(store.events_path(), "garbage\n").unwrap();
        assert!(matches!(read_events(&store.events_path()), Err(CurationError::Corrupt(_))));
    }

    #[test]
    fn newer_corpus_snapshot_is_trimmed() {
        let dir = tempfile::tempdir().unwrap();
        let store = StateDir::new(dir.path());
        let mut state = store.open().unwrap();
        state.import_seed(seed("a"), "curator").unwrap();
        store.snapshot(&state).unwrap();
        let old_meta = fs::read(store.seeds_path()).unwrap();
        state.import_seed(seed("b"), "curator").unwrap();
        store.snapshot(&state).unwrap();
        // Simulate a crash between the two snapshot writes.
        fs::write(store.seeds_path(), old_meta).unwrap();
        drop(state);
        let state = store.open().unwrap();
        assert_eq!(state.corpus().len(), 2);
    }
}
