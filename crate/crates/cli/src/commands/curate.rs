use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Args;

use supportloop_core::curation::{
    run_iteration, CurationError, IterationReport, IterationState, LoopConfig, LoopController, QuotaConfig,
    SelectOptions, StateDir,
};
use supportloop_core::ScenarioRegistry;

use super::{load_policy, GatewayArgs};
use crate::output::{load_corpus, Manifest, Records};

#[derive(Args, Debug)]
pub struct LoopArgs {
    /// State directory (events.log, corpus.snapshot, seeds.snapshot, quotas.toml).
    #[arg(long, value_name = "DIR")]
    pub state: PathBuf,
    /// Seed corpus; dialogues not yet known to the state are imported.
    #[arg(long, value_name = "PATH")]
    pub seeds: Option<PathBuf>,
    /// Per-scenario targets as TOML; copied into the state directory.
    #[arg(long, value_name = "PATH", conflicts_with = "total")]
    pub quotas: Option<PathBuf>,
    /// Spread this many dialogues over the canonical scenarios instead.
    #[arg(long)]
    pub total: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub iterations: u32,
    /// Completions requested per iteration, over all scenarios.
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 2)]
    pub seeds_per_prompt: usize,
    /// Only the most recent M pool entries of a scenario serve as seeds.
    #[arg(long, value_name = "M")]
    pub seed_window: Option<usize>,
    /// Borrow seeds from other scenarios when a scenario's own run short.
    #[arg(long)]
    pub global_fallback: bool,
    /// Reject scenarios missing from the canonical registry.
    #[arg(long)]
    pub strict: bool,
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub rng_seed: u64,
    #[command(flatten)]
    pub gateway: GatewayArgs,
    /// Iteration reports; stdout by default.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn record_failures(report: &IterationReport, manifest: &mut Manifest) {
    for s in &report.scenarios {
        let location = Some(format!("iteration {} / {}", report.iteration, s.scenario));
        if let Some(e) = &s.error {
            manifest.push("loop", location.clone(), "ScenarioFailed", e.clone());
        }
        if s.failed > 0 {
            manifest.push("loop", location, "GenerationFailed", format!("{} of {} completions failed", s.failed, s.requested));
        }
    }
}

pub fn run_loop(args: LoopArgs, manifest: &mut Manifest) -> Result<()> {
    let dir = StateDir::new(&args.state);
    let quotas = match (&args.quotas, args.total) {
        (Some(p), _) => Some(QuotaConfig::load(p)?),
        (None, Some(n)) => Some(QuotaConfig::proportional(&ScenarioRegistry::canonical(), n)),
        (None, None) => None,
    };
    if let Some(q) = &quotas {
        dir.write_quotas(q)?;
    }
    let mut state = dir.open().with_context(|| format!("cannot open state {}", args.state.display()))?;
    if let Some(q) = &quotas {
        state.set_targets(q);
    }
    if let Some(p) = &args.seeds {
        import_seeds(&mut state, &load_corpus(p, 0.0, false, manifest)?)?;
    }
    if state.targets().is_empty() {
        bail!("no quota targets; pass --quotas or --total (or keep a quotas.toml in the state directory)");
    }

    let cfg = LoopConfig {
        seeds_per_prompt: args.seeds_per_prompt,
        rng_seed: args.rng_seed,
        select: SelectOptions { global_fallback: args.global_fallback, seed_window: args.seed_window },
        batch_size: args.batch_size,
        sampling: args.gateway.sampling(),
        policy: load_policy(args.policy.as_ref())?,
        strict_scenarios: args.strict,
        ..LoopConfig::default()
    };
    let gateway = args.gateway.gateway()?;
    let mut out = Records::open(args.out.as_deref())?;
    for _ in 0..args.iterations {
        if state.targets().keys().all(|s| state.remaining(s) == 0) {
            log::info!("all quotas met or awaiting review; stopping");
            break;
        }
        let result = run_iteration(&mut state, &gateway, &cfg);
        dir.snapshot(&state)?;
        match result {
            Ok(report) => {
                record_failures(&report, manifest);
                out.record(&report)?;
            }
            Err(CurationError::AllScenariosFailed { report }) => {
                record_failures(&report, manifest);
                out.record(&report)?;
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.finish()
}

fn import_seeds(state: &mut IterationState, corpus: &supportloop_core::Corpus) -> Result<()> {
    let mut imported = 0;
    for d in corpus.iter() {
        if state.record(&d.id).is_none() && !state.corpus().contains(&d.id) {
            state.import_seed(d.clone(), "cli")?;
            imported += 1;
        }
    }
    log::info!("imported {imported} seed dialogue(s)");
    Ok(())
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, value_name = "DIR")]
    pub state: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Built review UI to serve at `/`.
    #[arg(long = "static", value_name = "DIR")]
    pub static_dir: Option<PathBuf>,
    /// Policy used to re-validate approvals and edits.
    #[arg(long, value_name = "PATH")]
    pub policy: Option<PathBuf>,
}

pub fn serve_review(args: ServeArgs) -> Result<()> {
    let dir = StateDir::new(&args.state);
    let state = dir.open().with_context(|| format!("cannot open state {}", args.state.display()))?;
    let cfg = LoopConfig { policy: load_policy(args.policy.as_ref())?, ..LoopConfig::default() };
    let handle = LoopController::spawn(state, None::<Arc<_>>, cfg, Some(dir));
    let addr = SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    let served = runtime.block_on(supportloop_review::serve(handle.clone(), addr, args.static_dir));
    handle.shutdown();
    served.with_context(|| format!("review service on {addr} failed"))
}
