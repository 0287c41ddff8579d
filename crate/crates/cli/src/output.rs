use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

use supportloop_core::corpus::{load_corpus_with, LabelMatching, LineError, LoadOptions};
use supportloop_core::{Corpus, CorpusError};

/// Line-delimited sink: a file when a path is given, stdout otherwise.
pub struct Records {
    out: Box<dyn Write>,
}

impl Records {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
            )),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Self { out })
    }

    pub fn record<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer(&mut self.out, value)?;
        self.out.write_all(b"\n")?;
        Ok(())
    }

    pub fn text(&mut self, text: &str) -> Result<()> {
        self.out.write_all(text.as_bytes())?;
        if !text.ends_with('\n') {
            self.out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn writer(&mut self) -> &mut Box<dyn Write> {
        &mut self.out
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    /// Subcommand or input that produced the failure.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    pub code: String,
    pub message: String,
}

/// Failures that did not stop the command. A non-empty manifest makes the
/// process exit with status 2.
#[derive(Debug, Default)]
pub struct Manifest {
    entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn push(&mut self, source: &str, location: Option<String>, code: &str, message: impl Into<String>) {
        let message = message.into();
        log::warn!("{source}{}: {code}: {message}", location.as_deref().map(|l| format!(" [{l}]")).unwrap_or_default());
        self.entries.push(ManifestEntry { source: source.into(), location, code: code.into(), message });
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// Writes the entries to `path`, or to stderr without one.
    pub fn write(&self, path: Option<&PathBuf>) -> Result<()> {
        let mut out: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?),
            None => Box::new(io::stderr().lock()),
        };
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Loads a corpus, recording skipped lines in the manifest. With the
/// default ratio of 0 any bad line is fatal.
pub fn load_corpus(path: &Path, max_error_ratio: f64, lenient_labels: bool, manifest: &mut Manifest) -> Result<Corpus> {
    let options = LoadOptions {
        max_error_ratio,
        matching: if lenient_labels { LabelMatching::Lenient } else { LabelMatching::Exact },
    };
    let source = path.display().to_string();
    let mut record = |errors: &[LineError]| {
        for e in errors {
            manifest.push(&source, Some(format!("line {}", e.line)), e.code, e.message.clone());
        }
    };
    match load_corpus_with(path, options) {
        Ok(loaded) => {
            record(&loaded.errors);
            Ok(loaded.corpus)
        }
        Err(e) => {
            if let CorpusError::TooManyErrors { errors, .. } = &e {
                record(errors);
            }
            Err(anyhow::Error::new(e).context(format!("cannot load corpus {source}")))
        }
    }
}
