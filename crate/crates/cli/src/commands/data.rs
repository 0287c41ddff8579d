use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde_json::json;

use supportloop_core::export::{split as split_corpus, write_sft_jsonl, SplitRatios};
use supportloop_core::save_corpus;

use crate::output::{Manifest, Records};
use crate::CorpusArgs;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Targets prefixed with `[<Strategy Name>] `.
    Strategies,
    NoStrategies,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_enum, default_value_t = Variant::Strategies)]
    pub variant: Variant,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn export(args: ExportArgs, manifest: &mut Manifest) -> Result<()> {
    let corpus = args.corpus.load(manifest)?;
    let mut out = Records::open(args.out.as_deref())?;
    let n = write_sft_jsonl(out.writer(), &corpus, args.variant == Variant::Strategies)?;
    out.finish()?;
    log::info!("wrote {n} examples");
    Ok(())
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, default_value_t = 0.9)]
    pub train: f64,
    #[arg(long, default_value_t = 0.1)]
    pub test: f64,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[arg(long, value_name = "PATH")]
    pub train_out: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub test_out: PathBuf,
}

pub fn split(args: SplitArgs, manifest: &mut Manifest) -> Result<()> {
    let corpus = args.corpus.load(manifest)?;
    let (train, test) = split_corpus(&corpus, SplitRatios { train: args.train, test: args.test }, args.rng_seed)?;
    save_corpus(&train, &args.train_out)?;
    save_corpus(&test, &args.test_out)?;
    let mut out = Records::open(None)?;
    for (name, part, path) in [("train", &train, &args.train_out), ("test", &test, &args.test_out)] {
        out.record(&json!({ "split": name, "dialogues": part.len(), "path": path }))?;
    }
    out.finish()
}
