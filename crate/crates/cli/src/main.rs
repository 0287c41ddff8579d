//! `supportloop`: generate, curate, analyze and export emotional-support
//! dialogue corpora.
//!
//! Every subcommand writes line-delimited JSON records unless asked for a
//! table. Exit status is 0 on full success, 1 on a fatal error and 2 when
//! some items failed; the failures are written as an error manifest.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::Manifest;

#[derive(Parser)]
#[command(name = "supportloop", version, about = "Synthetic emotional-support dialogue pipeline")]
struct Cli {
    /// Write partial-failure records here instead of stderr.
    #[arg(long, global = true, value_name = "PATH")]
    error_manifest: Option<PathBuf>,
    /// Raise log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Request self-chat dialogues for one scenario from the chat gateway.
    Generate(commands::generate::GenerateArgs),
    /// Triage raw generations into accept / needs-review / reject.
    Validate(commands::generate::ValidateArgs),
    /// Run curation iterations against a state directory.
    Loop(commands::curate::LoopArgs),
    /// Serve the review queue over HTTP.
    ServeReview(commands::curate::ServeArgs),
    /// Corpus statistics, phase distribution and strategy transitions.
    Analyze(commands::report::AnalyzeArgs),
    /// Reference-based response metrics.
    Eval(commands::report::EvalArgs),
    /// Toxicity audit of every utterance.
    Toxicity(commands::report::ToxicityArgs),
    /// Fine-tuning examples, one per assistant turn.
    Export(commands::data::ExportArgs),
    /// Stratified train/test split.
    Split(commands::data::SplitArgs),
}

/// Input corpus options shared by several subcommands.
#[derive(Args, Debug, Clone)]
pub struct CorpusArgs {
    /// Line-delimited dialogue records.
    #[arg(long, value_name = "PATH")]
    pub corpus: PathBuf,
    /// Fraction of lines allowed to fail parsing; skipped lines go to the
    /// error manifest.
    #[arg(long, default_value_t = 0.0, value_name = "RATIO")]
    pub max_error_ratio: f64,
    /// Accept case, spacing and punctuation variants of strategy labels.
    #[arg(long)]
    pub lenient_labels: bool,
}

impl CorpusArgs {
    pub fn load(&self, manifest: &mut Manifest) -> anyhow::Result<supportloop_core::Corpus> {
        output::load_corpus(&self.corpus, self.max_error_ratio, self.lenient_labels, manifest)
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Records,
    Table,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let mut manifest = Manifest::default();
    let result = match cli.command {
        Command::Generate(a) => commands::generate::generate(a, &mut manifest),
        Command::Validate(a) => commands::generate::validate(a, &mut manifest),
        Command::Loop(a) => commands::curate::run_loop(a, &mut manifest),
        Command::ServeReview(a) => commands::curate::serve_review(a),
        Command::Analyze(a) => commands::report::analyze(a, &mut manifest),
        Command::Eval(a) => commands::report::eval(a),
        Command::Toxicity(a) => commands::report::toxicity(a, &mut manifest),
        Command::Export(a) => commands::data::export(a, &mut manifest),
        Command::Split(a) => commands::data::split(a, &mut manifest),
    };

    if !manifest.is_empty() {
        if let Err(e) = manifest.write(cli.error_manifest.as_ref()) {
            eprintln!("error: cannot write error manifest: {e:#}");
        }
    }
    match result {
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Ok(()) if !manifest.is_empty() => {
            eprintln!("{} item(s) failed; see the error manifest", manifest.len());
            ExitCode::from(2)
        }
        Ok(()) => ExitCode::SUCCESS,
    }
}
