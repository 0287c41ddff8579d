//! Self-chat prompt rendering and the chat-completion gateway.

pub mod backend;
pub mod cost;
mod gateway;
pub mod template;

use serde::{Deserialize, Serialize};

pub use backend::{BackendError, ChatBackend, ChatCall, ChatMessage, ChatReply, FixtureBackend};
pub use cost::{estimate_cost, usage_cost, AverageTokens, Pricing, TokenUsage};
pub use gateway::{
    Gateway, GatewayConfig, GenerationBatch, GenerationRequest, ItemOutcome, RawGeneration,
};
pub use template::{build_prompt, PromptTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sampling {
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for Sampling {
    fn default() -> Self {
        Self {
            temperature: 1.0,
            max_tokens: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GenerationError {
    #[error("at least one seed dialogue is required")]
    EmptySeeds,
    #[error("unknown scenario {0:?}")]
    UnknownScenario(String),
    #[error("count must be positive")]
    ZeroCount,
    #[error("invalid seed {0}")]
    InvalidSeed(String),
    #[error("template error: {0}")]
    Template(String),
    #[error("gateway configuration: {0}")]
    Config(String),
    #[error("authentication failed (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited after {attempts} attempt(s)")]
    RateLimited { attempts: u32 },
    #[error("provider error after {attempts} attempt(s): {message}")]
    Provider {
        status: Option<u16>,
        message: String,
        attempts: u32,
    },
}

impl GenerationError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            GenerationError::EmptySeeds => "EmptySeeds",
            GenerationError::UnknownScenario(_) => "UnknownScenario",
            GenerationError::ZeroCount => "ZeroCount",
            GenerationError::InvalidSeed(_) => "InvalidSeed",
            GenerationError::Template(_) => "Template",
            GenerationError::Config(_) => "Config",
            GenerationError::Auth { .. } => "Auth",
            GenerationError::RateLimited { .. } => "RateLimited",
            GenerationError::Provider { .. } => "Provider",
        }
    }

    fn from_backend(e: BackendError, attempts: u32) -> Self {
        match e {
            BackendError::Auth { status } => GenerationError::Auth { status },
            BackendError::RateLimited { .. } => GenerationError::RateLimited { attempts },
            other => GenerationError::Provider {
                status: other.status(),
                message: other.to_string(),
                attempts,
            },
        }
    }
}
