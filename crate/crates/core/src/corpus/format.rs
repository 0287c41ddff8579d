//! Line-delimited record format.
//!
//! One dialogue per line:
//!
//! ```text
//! {"id":"d-…","scene":"Academic Stress","description":"…","content":[{"User":"…"},{"AI Strategy":"Emotional Validation","AI":"…"}],"provenance":"generated","iteration":0}
//! ```
//!
//! `id`, `provenance` and `iteration` are optional on input. Strategy labels
//! are written as full names and accepted as full names or abbreviations.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use super::dialogue::{Corpus, Dialogue, DialogueId, Provenance, Speaker, Utterance};
use super::strategy::Strategy;
use super::CorpusError;

pub const USER_KEY: &str = "User";
pub const AI_KEY: &str = "AI";
pub const STRATEGY_KEY: &str = "AI Strategy";

/// How strategy labels are resolved against the registry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelMatching {
    /// Full name or abbreviation, byte-exact.
    #[default]
    Exact,
    /// Also accept case, punctuation and spacing variants.
    Lenient,
}

/// One turn as it appears in a record, before label resolution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTurn {
    pub speaker: Speaker,
    pub strategy_label: Option<String>,
    pub text: String,
}

/// A structurally parsed record whose strategy labels are still strings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub id: Option<String>,
    pub scene: String,
    pub description: String,
    pub turns: Vec<RawTurn>,
    pub provenance: Option<Provenance>,
    pub iteration: Option<u32>,
}

impl RawRecord {
    pub fn from_json_str(text: &str) -> Result<Self, CorpusError> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| CorpusError::MalformedRecord(format!("not valid JSON: {e}")))?;
        Self::from_value(&value)
    }

    pub fn from_value(value: &Value) -> Result<Self, CorpusError> {
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("record is not an object"))?;
        let scene = required_str(obj, "scene")?;
        let description = required_str(obj, "description")?;
        let content = obj
            .get("content")
            .ok_or_else(|| malformed("missing field `content`"))?
            .as_array()
            .ok_or_else(|| malformed("`content` is not a list"))?;
        let turns = content
            .iter()
            .enumerate()
            .map(|(i, entry)| parse_turn(i, entry))
            .collect::<Result<Vec<_>, _>>()?;
        let id = match obj.get("id") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) if !s.is_empty() => Some(s.clone()),
            Some(_) => return Err(malformed("`id` must be a non-empty string")),
        };
        let provenance = match obj.get("provenance") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                serde_json::from_value(v.clone())
                    .map_err(|_| malformed("`provenance` must be seed, generated or edited"))?,
            ),
        };
        let iteration = match obj.get("iteration") {
            None | Some(Value::Null) => None,
            Some(v) => Some(
                v.as_u64()
                    .and_then(|n| u32::try_from(n).ok())
                    .ok_or_else(|| malformed("`iteration` must be a non-negative integer"))?,
            ),
        };
        Ok(Self {
            id,
            scene,
            description,
            turns,
            provenance,
            iteration,
        })
    }

    /// Resolves labels and checks dialogue invariants.
    pub fn into_dialogue(self, matching: LabelMatching) -> Result<Dialogue, CorpusError> {
        if self.turns.len() < 2 {
            return Err(malformed(format!(
                "content has {} turn(s); at least 2 required",
                self.turns.len()
            )));
        }
        if self.turns[0].speaker != Speaker::User {
            return Err(CorpusError::RoleError { found: self.turns[0].speaker });
        }
        let mut content = Vec::with_capacity(self.turns.len());
        for (i, turn) in self.turns.into_iter().enumerate() {
            if turn.text.trim().is_empty() {
                return Err(malformed(format!("turn {i} has empty text")));
            }
            let strategy = match (turn.speaker, turn.strategy_label) {
                (Speaker::User, _) => None,
                (Speaker::Ai, None) => {
                    return Err(malformed(format!("AI turn {i} lacks `{STRATEGY_KEY}`")))
                }
                (Speaker::Ai, Some(label)) => {
                    let resolved = match matching {
                        LabelMatching::Exact => Strategy::from_label(&label),
                        LabelMatching::Lenient => Strategy::from_label_fuzzy(&label),
                    };
                    Some(resolved.ok_or(CorpusError::UnknownStrategy { label, turn: i })?)
                }
            };
            content.push(Utterance {
                speaker: turn.speaker,
                strategy,
                text: turn.text,
            });
        }
        let mut dialogue = Dialogue {
            id: DialogueId::new(""),
            scene: self.scene,
            description: self.description,
            content,
            provenance: self.provenance.unwrap_or_default(),
            iteration: self.iteration.unwrap_or(0),
        };
        dialogue.id = match self.id {
            Some(id) => DialogueId::new(id),
            None => dialogue.content_id(),
        };
        Ok(dialogue)
    }
}

fn malformed(msg: impl Into<String>) -> CorpusError {
    CorpusError::MalformedRecord(msg.into())
}

fn required_str(obj: &Map<String, Value>, key: &str) -> Result<String, CorpusError> {
    match obj.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(format!("`{key}` is not a string"))),
        None => Err(malformed(format!("missing field `{key}`"))),
    }
}

fn parse_turn(index: usize, entry: &Value) -> Result<RawTurn, CorpusError> {
    let obj = entry
        .as_object()
        .ok_or_else(|| malformed(format!("turn {index} is not an object")))?;
    if let Some(key) = obj
        .keys()
        .find(|k| !matches!(k.as_str(), USER_KEY | AI_KEY | STRATEGY_KEY))
    {
        return Err(malformed(format!("turn {index} has unexpected key {key:?}")));
    }
    let text_of = |key: &str| -> Result<String, CorpusError> {
        obj[key]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| malformed(format!("turn {index} `{key}` is not a string")))
    };
    match (obj.contains_key(USER_KEY), obj.contains_key(AI_KEY)) {
        (true, false) => {
            if obj.contains_key(STRATEGY_KEY) {
                return Err(malformed(format!("User turn {index} carries `{STRATEGY_KEY}`")));
            }
            Ok(RawTurn {
                speaker: Speaker::User,
                strategy_label: None,
                text: text_of(USER_KEY)?,
            })
        }
        (false, true) => {
            let strategy_label = match obj.get(STRATEGY_KEY) {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(_) => {
                    return Err(malformed(format!("turn {index} `{STRATEGY_KEY}` is not a string")))
                }
            };
            Ok(RawTurn {
                speaker: Speaker::Ai,
                strategy_label,
                text: text_of(AI_KEY)?,
            })
        }
        (true, true) => Err(malformed(format!("turn {index} has both speaker keys"))),
        (false, false) => Err(malformed(format!("turn {index} has no `User` or `AI` key"))),
    }
}

struct TurnOut<'a>(&'a Utterance);

impl Serialize for TurnOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let u = self.0;
        match (u.speaker, u.strategy) {
            (Speaker::Ai, Some(strategy)) => {
                let mut map = serializer.serialize_map(Some(2))?;
                map.serialize_entry(STRATEGY_KEY, strategy.name())?;
                map.serialize_entry(AI_KEY, &u.text)?;
                map.end()
            }
            _ => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry(u.speaker.key(), &u.text)?;
                map.end()
            }
        }
    }
}

struct ContentOut<'a>(&'a [Utterance]);

impl Serialize for ContentOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(TurnOut))
    }
}

struct RecordOut<'a> {
    dialogue: &'a Dialogue,
    with_metadata: bool,
}

impl Serialize for RecordOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let d = self.dialogue;
        let fields = if self.with_metadata { 6 } else { 3 };
        let mut s = serializer.serialize_struct("Dialogue", fields)?;
        if self.with_metadata {
            s.serialize_field("id", &d.id)?;
        }
        s.serialize_field("scene", &d.scene)?;
        s.serialize_field("description", &d.description)?;
        s.serialize_field("content", &ContentOut(&d.content))?;
        if self.with_metadata {
            s.serialize_field("provenance", &d.provenance)?;
            s.serialize_field("iteration", &d.iteration)?;
        }
        s.end()
    }
}

impl Serialize for Dialogue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        RecordOut {
            dialogue: self,
            with_metadata: true,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Dialogue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        RawRecord::from_value(&value)
            .and_then(|r| r.into_dialogue(LabelMatching::Exact))
            .map_err(serde::de::Error::custom)
    }
}

/// The bare exchange record (scene, description, content), as shown to the
/// generator and used for content hashing.
pub fn record_json(d: &Dialogue) -> String {
    serde_json::to_string(&RecordOut {
        dialogue: d,
        with_metadata: false,
    })
    .expect("record serialization is infallible")
}

pub fn parse_dialogue(json_text: &str) -> Result<Dialogue, CorpusError> {
    parse_dialogue_with(json_text, LabelMatching::Exact)
}

pub fn parse_dialogue_with(json_text: &str, matching: LabelMatching) -> Result<Dialogue, CorpusError> {
    RawRecord::from_json_str(json_text)?.into_dialogue(matching)
}

/// Canonical single-line form including id, provenance and iteration.
pub fn serialize_dialogue(d: &Dialogue) -> Result<String, CorpusError> {
    d.check_invariants()?;
    Ok(serde_json::to_string(&RecordOut {
        dialogue: d,
        with_metadata: true,
    })
    .expect("record serialization is infallible"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    /// 1-based line number, or record index for array input.
    pub line: usize,
    pub code: &'static str,
    pub message: String,
}

#[derive(Debug, Clone, Copy)]
pub struct LoadOptions {
    /// Fraction of non-blank lines allowed to fail before the load fails.
    pub max_error_ratio: f64,
    pub matching: LabelMatching,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            max_error_ratio: 0.0,
            matching: LabelMatching::Exact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LoadedCorpus {
    pub corpus: Corpus,
    pub errors: Vec<LineError>,
}

pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    load_corpus_with(path, LoadOptions::default()).map(|l| l.corpus)
}

/// Loads line-delimited records. A file whose first non-blank character is
/// `[` is read as a single JSON array of records instead.
pub fn load_corpus_with(path: &Path, options: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut loaded = parse_corpus_text(&text, options)?;
    loaded.corpus.source_path = Some(path.to_path_buf());
    Ok(loaded)
}

pub fn parse_corpus_text(text: &str, options: LoadOptions) -> Result<LoadedCorpus, CorpusError> {
    let mut corpus = Corpus::new();
    let mut errors = Vec::new();
    let mut total = 0usize;

    let mut accept = |line: usize, result: Result<Dialogue, CorpusError>, corpus: &mut Corpus| {
        let outcome = result.and_then(|d| corpus.push(d));
        if let Err(e) = outcome {
            errors.push(LineError {
                line,
                code: e.code(),
                message: e.to_string(),
            });
        }
    };

    if text.trim_start().starts_with('[') {
        let values: Vec<Value> = serde_json::from_str(text)
            .map_err(|e| malformed(format!("corpus array is not valid JSON: {e}")))?;
        for (i, value) in values.iter().enumerate() {
            total += 1;
            let parsed = RawRecord::from_value(value).and_then(|r| r.into_dialogue(options.matching));
            accept(i + 1, parsed, &mut corpus);
        }
    } else {
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            total += 1;
            accept(i + 1, parse_dialogue_with(line, options.matching), &mut corpus);
        }
    }

    if total > 0 && errors.len() as f64 > options.max_error_ratio * total as f64 {
        return Err(CorpusError::TooManyErrors {
            failed: errors.len(),
            total,
            errors,
        });
    }
    Ok(LoadedCorpus { corpus, errors })
}

pub fn corpus_to_string(corpus: &Corpus) -> Result<String, CorpusError> {
    let mut out = String::new();
    for d in corpus {
        out.push_str(&serialize_dialogue(d)?);
        out.push('\n');
    }
    Ok(out)
}

/// Writes the corpus through a temporary file and renames it into place.
pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let body = corpus_to_string(corpus)?;
    write_atomic(path, body.as_bytes()).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
