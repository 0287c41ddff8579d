pub mod curate;
pub mod data;
pub mod generate;
pub mod report;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use supportloop_core::generation::{Gateway, GatewayConfig, PromptTemplate, Sampling};
use supportloop_core::ValidationPolicy;

/// Chat gateway options shared by `generate` and `loop`.
#[derive(Args, Debug, Clone)]
pub struct GatewayArgs {
    /// Gateway settings (endpoint, model, api_key_env, retry, ...) as TOML.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Serve responses from a fixture directory instead of the network.
    #[arg(long, value_name = "DIR")]
    pub mock: Option<PathBuf>,
    /// Replacement prompt template.
    #[arg(long, value_name = "PATH")]
    pub template: Option<PathBuf>,
    #[arg(long)]
    pub temperature: Option<f64>,
    #[arg(long)]
    pub max_tokens: Option<u32>,
}

impl GatewayArgs {
    pub fn gateway(&self) -> Result<Gateway> {
        let config = match &self.config {
            Some(p) => GatewayConfig::from_toml(&read(p)?).with_context(|| format!("in {}", p.display()))?,
            None => GatewayConfig::default(),
        };
        let mut gateway = match &self.mock {
            Some(dir) => Gateway::mock(dir, config)?,
            None => Gateway::http(config)?,
        };
        if let Some(p) = &self.template {
            gateway = gateway.with_template(PromptTemplate::from_text(&read(p)?)?);
        }
        Ok(gateway)
    }

    pub fn sampling(&self) -> Sampling {
        let mut s = Sampling::default();
        if let Some(t) = self.temperature {
            s.temperature = t;
        }
        if let Some(m) = self.max_tokens {
            s.max_tokens = m;
        }
        s
    }
}

pub fn read(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn load_policy(path: Option<&PathBuf>) -> Result<ValidationPolicy> {
    match path {
        Some(p) => ValidationPolicy::load(p).with_context(|| format!("in {}", p.display())),
        None => Ok(ValidationPolicy::default()),
    }
}
