use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;
use serde::Serialize;

use supportloop_core::curation::{select_seeds, SeedOrigin, SeedPool, SelectOptions};
use supportloop_core::generation::{GenerationRequest, RawGeneration};
use supportloop_core::validation::Validator;
use supportloop_core::{Corpus, ScenarioRegistry, ValidationReport};

use super::{load_policy, read, GatewayArgs};
use crate::output::{Manifest, Records};
use crate::CorpusArgs;

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Scenario to generate for.
    #[arg(long)]
    pub scenario: String,
    /// Seed dialogues are drawn from this corpus.
    #[command(flatten)]
    pub seeds: CorpusArgs,
    /// Seed dialogues per prompt.
    #[arg(long, default_value_t = 2)]
    pub seeds_per_prompt: usize,
    /// Number of completions to request.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    /// Reject scenarios missing from the canonical registry.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub gateway: GatewayArgs,
    /// Output file; stdout by default.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

pub fn generate(args: GenerateArgs, manifest: &mut Manifest) -> Result<()> {
    if args.strict && !ScenarioRegistry::canonical().contains(&args.scenario) {
        bail!("unknown scenario {:?}", args.scenario);
    }
    let corpus = args.seeds.load(manifest)?;
    let seeds = pick_seeds(&corpus, &args.scenario, args.seeds_per_prompt, args.rng_seed)?;
    let gateway = args.gateway.gateway()?;
    let request = GenerationRequest {
        scenario: args.scenario.clone(),
        seeds,
        count: args.count,
        sampling: args.gateway.sampling(),
        id_prefix: String::new(),
    };
    let batch = gateway.generate(&request)?;
    let mut out = Records::open(args.out.as_deref())?;
    for item in &batch.items {
        match &item.result {
            Ok(raw) => out.record(raw)?,
            Err(e) => manifest.push("generate", Some(item.request_id.clone()), e.code(), e.to_string()),
        }
    }
    out.finish()?;
    let usage = batch.usage();
    log::info!(
        "{} of {} completions succeeded; {} input / {} output tokens",
        batch.success_count(),
        batch.items.len(),
        usage.input,
        usage.output
    );
    Ok(())
}

/// Seeds from the scenario itself when it has enough, otherwise from the
/// whole corpus.
fn pick_seeds(corpus: &Corpus, scenario: &str, k: usize, rng_seed: u64) -> Result<Vec<supportloop_core::Dialogue>> {
    let mut pool = SeedPool::new();
    for d in corpus.iter() {
        pool.add(&d.scene, d.id.clone(), SeedOrigin::Manual);
    }
    let options = SelectOptions { global_fallback: true, seed_window: None };
    Ok(select_seeds(&pool, corpus, scenario, k, rng_seed, options)?)
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Raw generations: `generate` output records, or one raw completion per
    /// line together with --scenario.
    #[arg(long, value_name = "PATH")]
    pub input: PathBuf,
    /// Expected scenario for lines that do not carry one.
    #[arg(long)]
    pub scenario: Option<String>,
    /// Existing corpus for duplicate detection.
    #[arg(long, value_name = "PATH")]
    pub against: Option<PathBuf>,
    /// Validation policy TOML (min_turns, dup_threshold, max_correctable).
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct ValidationRecord<'a> {
    line: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    request_id: Option<&'a str>,
    scenario: &'a str,
    #[serde(flatten)]
    report: &'a ValidationReport,
}

pub fn validate(args: ValidateArgs, manifest: &mut Manifest) -> Result<()> {
    let policy = load_policy(args.policy.as_ref())?;
    let against = match &args.against {
        Some(p) => crate::output::load_corpus(p, 0.0, false, manifest)?,
        None => Corpus::new(),
    };
    let validator = Validator::new(&against, policy);
    let text = read(&args.input)?;
    let mut out = Records::open(args.out.as_deref())?;
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let raw: Option<RawGeneration> = serde_json::from_str(line).ok();
        let (request_id, scenario, raw_text) = match &raw {
            Some(g) => (Some(g.request_id.as_str()), g.scenario.as_str(), g.raw_text.as_str()),
            None => match &args.scenario {
                Some(s) => (None, s.as_str(), line),
                None => {
                    manifest.push("validate", Some(format!("line {}", i + 1)), "MissingScenario", "line has no scenario and --scenario was not given");
                    continue;
                }
            },
        };
        let report = validator.validate(raw_text, scenario);
        out.record(&ValidationRecord { line: i + 1, request_id, scenario, report: &report })?;
    }
    out.finish()
}
