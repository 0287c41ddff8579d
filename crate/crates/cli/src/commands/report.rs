use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use supportloop_core::analysis::{corpus_stats, phase_distribution, transition_stats_with, Denominator};
use supportloop_core::metrics::{evaluate, load_embeddings};
use supportloop_core::safety::{
    audit_corpus, AuditOptions, PerspectiveConfig, PerspectiveScorer, SafetyError, StubScorer, ToxicityScorer,
    ATTRIBUTES,
};
use supportloop_core::{tokenize, Speaker};

use super::read;
use crate::output::{Manifest, Records};
use crate::{CorpusArgs, Format};

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum DenominatorArg {
    Windows,
    Dialogues,
    Utterances,
}

impl From<DenominatorArg> for Denominator {
    fn from(d: DenominatorArg) -> Self {
        match d {
            DenominatorArg::Windows => Denominator::Windows,
            DenominatorArg::Dialogues => Denominator::Dialogues,
            DenominatorArg::Utterances => Denominator::Utterances,
        }
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Directory for report files; stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    /// Number of conversation phases.
    #[arg(long, default_value_t = 4)]
    pub bins: usize,
    /// Transition window lengths to report.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4, 5])]
    pub hops: Vec<usize>,
    #[arg(long, value_enum, default_value_t = DenominatorArg::Windows)]
    pub denominator: DenominatorArg,
    /// Transition entries per table; records list all of them.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

fn tagged<T: Serialize>(report: &str, value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value)?;
    match v.as_object_mut() {
        Some(obj) => {
            obj.insert("report".into(), json!(report));
            Ok(v)
        }
        None => Ok(json!({ "report": report, "value": v })),
    }
}

/// One report: a single file under `dir`, or a section of stdout.
fn sink(dir: Option<&Path>, name: &str, format: Format) -> Result<Records> {
    match dir {
        Some(d) => {
            let ext = if format == Format::Table { "txt" } else { "jsonl" };
            Records::open(Some(&d.join(format!("{name}.{ext}"))))
        }
        None => Records::open(None),
    }
}

pub fn analyze(args: AnalyzeArgs, manifest: &mut Manifest) -> Result<()> {
    let corpus = args.corpus.load(manifest)?;
    if let Some(d) = &args.out {
        std::fs::create_dir_all(d).with_context(|| format!("cannot create {}", d.display()))?;
    }
    let dir = args.out.as_deref();
    let table = args.format == Format::Table;

    let stats = corpus_stats(&corpus)?;
    let mut out = sink(dir, "corpus_stats", args.format)?;
    if table {
        out.text(&stats.to_table())?;
    } else {
        out.record(&tagged("corpus_stats", &stats)?)?;
    }
    out.finish()?;

    let phases = phase_distribution(&corpus, args.bins)?;
    let mut out = sink(dir, "phase_distribution", args.format)?;
    if table {
        out.text(&phases.to_table())?;
    } else {
        let mut v = tagged("phase_distribution", &phases)?;
        v["proportions"] = json!(phases.proportions());
        out.record(&v)?;
    }
    out.finish()?;

    for &hops in &args.hops {
        let t = transition_stats_with(&corpus, hops, args.denominator.into())?;
        let mut out = sink(dir, &format!("transitions_{hops}hop"), args.format)?;
        if table {
            out.text(&t.to_table(args.top))?;
        } else {
            for (rank, e) in t.entries.iter().enumerate() {
                out.record(&json!({
                    "report": "transitions",
                    "hops": hops,
                    "denominator": t.denominator,
                    "total_windows": t.total_windows,
                    "rank": rank + 1,
                    "window": e.window,
                    "count": e.count,
                    "per_mille": e.per_mille,
                }))?;
            }
        }
        out.finish()?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Candidate responses, one per line.
    #[arg(long, value_name = "PATH")]
    pub hyps: PathBuf,
    /// Reference responses, parallel to --hyps.
    #[arg(long, value_name = "PATH")]
    pub refs: PathBuf,
    /// Word vectors (`token v1 v2 ...` per line) enabling Vector Extrema.
    #[arg(long, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn read_lines(path: &PathBuf) -> Result<Vec<supportloop_core::TokenSeq>> {
    Ok(read(path)?.lines().map(tokenize).collect())
}

pub fn eval(args: EvalArgs) -> Result<()> {
    let hyps = read_lines(&args.hyps)?;
    let refs = read_lines(&args.refs)?;
    if hyps.len() != refs.len() {
        bail!("{} has {} lines but {} has {}", args.hyps.display(), hyps.len(), args.refs.display(), refs.len());
    }
    let table = match &args.embeddings {
        Some(p) => Some(load_embeddings(p)?),
        None => None,
    };
    let report = evaluate(&hyps, &refs, table.as_ref())?;
    let mut out = Records::open(args.out.as_deref())?;
    match args.format {
        Format::Records => out.record(&report)?,
        Format::Table => out.text(&report.to_table())?,
    }
    out.finish()
}

#[derive(ValueEnum, Debug, Clone, Copy)]
pub enum SpeakerArg {
    User,
    Ai,
}

#[derive(Args, Debug)]
pub struct ToxicityArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Score offline with the bundled lexicon instead of the Perspective API.
    #[arg(long, conflicts_with_all = ["endpoint", "api_key_env"])]
    pub stub: bool,
    /// Lexicon for --stub (`<attribute> <term>` per line).
    #[arg(long, value_name = "PATH", requires = "stub")]
    pub lexicon: Option<PathBuf>,
    /// Perspective comments:analyze URL.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Environment variable holding the API key.
    #[arg(long, value_name = "VAR")]
    pub api_key_env: Option<String>,
    #[arg(long, value_name = "PER_MINUTE")]
    pub rate_limit: Option<f64>,
    /// Progress file; scores found there are reused and new ones appended.
    #[arg(long, value_name = "PATH")]
    pub resume: Option<PathBuf>,
    /// Score only one speaker's utterances.
    #[arg(long, value_enum)]
    pub speaker: Option<SpeakerArg>,
    #[arg(long, default_value_t = 4)]
    pub concurrency: usize,
    #[arg(long, value_enum, default_value_t = Format::Records)]
    pub format: Format,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn toxicity(args: ToxicityArgs, manifest: &mut Manifest) -> Result<()> {
    let corpus = args.corpus.load(manifest)?;
    let scorer: Box<dyn ToxicityScorer> = if args.stub {
        match &args.lexicon {
            Some(p) => Box::new(StubScorer::from_lexicon(&read(p)?)?),
            None => Box::new(StubScorer::bundled()),
        }
    } else {
        let mut cfg = PerspectiveConfig::default();
        if let Some(e) = &args.endpoint {
            cfg.endpoint = e.clone();
        }
        if let Some(v) = &args.api_key_env {
            cfg.api_key_env = Some(v.clone()).filter(|v| !v.is_empty());
        }
        if let Some(r) = args.rate_limit {
            cfg.rate_limit_per_minute = r;
        }
        Box::new(PerspectiveScorer::new(cfg)?)
    };
    let options = AuditOptions {
        speaker: args.speaker.map(|s| match s {
            SpeakerArg::User => Speaker::User,
            SpeakerArg::Ai => Speaker::Ai,
        }),
        concurrency: args.concurrency.max(1),
        progress: args.resume.clone(),
    };
    let audit = match audit_corpus(&corpus, scorer.as_ref(), &options) {
        Ok(a) => a,
        Err(SafetyError::At { dialogue_id, turn, source }) => {
            let hint = if args.resume.is_some() { "; rerun with the same --resume file to continue" } else { "" };
            manifest.push("toxicity", Some(format!("{dialogue_id} turn {turn}")), "ScoringFailed", format!("{source}{hint}"));
            return Ok(());
        }
        Err(e) => return Err(e.into()),
    };
    let mut out = Records::open(args.out.as_deref())?;
    match args.format {
        Format::Table => out.text(&audit.to_table())?,
        Format::Records => {
            for (attribute, mean) in ATTRIBUTES.iter().zip(audit.means.values()) {
                let worst = audit.maxima.iter().find(|m| m.attribute == *attribute);
                out.record(&json!({
                    "attribute": attribute,
                    "mean": mean,
                    "max": worst.map(|m| m.score),
                    "max_dialogue_id": worst.map(|m| &m.dialogue_id),
                    "max_turn": worst.map(|m| m.turn),
                    "utterances": audit.utterances,
                    "resumed": audit.resumed,
                }))?;
            }
        }
    }
    out.finish()
}
