use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::corpus::Dialogue;
use crate::net::{RateLimiter, RetryPolicy};

use super::backend::{
    scenario_slug, BackendError, ChatBackend, ChatCall, ChatMessage, FixtureBackend,
    HttpChatBackend,
};
use super::cost::{Pricing, TokenUsage};
use super::template::PromptTemplate;
use super::{GenerationError, Sampling};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GatewayConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: Option<String>,
    pub max_concurrency: usize,
    pub retry: RetryPolicy,
    pub rate_limit_per_minute: f64,
    pub pricing: Pricing,
    #[serde(with = "crate::net::millis")]
    pub timeout: Duration,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-3.5-turbo".into(),
            api_key_env: Some("OPENAI_API_KEY".into()),
            max_concurrency: 4,
            retry: RetryPolicy::default(),
            rate_limit_per_minute: 60.0,
            pricing: Pricing::default(),
            timeout: Duration::from_secs(120),
        }
    }
}

impl GatewayConfig {
    pub fn check(&self) -> Result<(), GenerationError> {
        if self.retry.max_attempts < 1 {
            return Err(GenerationError::Config("retry.max_attempts must be >= 1".into()));
        }
        if !(self.rate_limit_per_minute > 0.0) {
            return Err(GenerationError::Config("rate_limit_per_minute must be > 0".into()));
        }
        if self.max_concurrency < 1 {
            return Err(GenerationError::Config("max_concurrency must be >= 1".into()));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self, GenerationError> {
        let cfg: Self = toml::from_str(text).map_err(|e| GenerationError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub scenario: String,
    pub seeds: Vec<Dialogue>,
    pub count: usize,
    pub sampling: Sampling,
    /// Prefix for request ids, e.g. the iteration number.
    pub id_prefix: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawGeneration {
    pub request_id: String,
    pub scenario: String,
    pub raw_text: String,
    pub token_usage: Option<TokenUsage>,
    #[serde(with = "crate::net::millis")]
    pub latency: Duration,
}

#[derive(Debug)]
pub struct ItemOutcome {
    pub request_id: String,
    pub attempts: u32,
    /// Errors of attempts that were retried.
    pub retries: Vec<BackendError>,
    pub result: Result<RawGeneration, GenerationError>,
}

#[derive(Debug)]
pub struct GenerationBatch {
    pub scenario: String,
    /// One entry per requested item, in request order.
    pub items: Vec<ItemOutcome>,
}

impl GenerationBatch {
    pub fn successes(&self) -> impl Iterator<Item = &RawGeneration> {
        self.items.iter().filter_map(|i| i.result.as_ref().ok())
    }

    pub fn failures(&self) -> impl Iterator<Item = (&str, &GenerationError)> {
        self.items
            .iter()
            .filter_map(|i| i.result.as_ref().err().map(|e| (i.request_id.as_str(), e)))
    }

    pub fn success_count(&self) -> usize {
        self.successes().count()
    }

    pub fn failure_count(&self) -> usize {
        self.items.len() - self.success_count()
    }

    pub fn usage(&self) -> TokenUsage {
        let mut total = TokenUsage::default();
        for g in self.successes() {
            if let Some(u) = g.token_usage {
                total += u;
            }
        }
        total
    }
}

/// Concurrent, retrying, rate-limited front for a [`ChatBackend`].
/// Safe to share across threads.
pub struct Gateway {
    backend: Arc<dyn ChatBackend>,
    config: GatewayConfig,
    limiter: RateLimiter,
    template: PromptTemplate,
}

impl Gateway {
    pub fn new(backend: Arc<dyn ChatBackend>, config: GatewayConfig) -> Result<Self, GenerationError> {
        config.check()?;
        Ok(Self {
            backend,
            limiter: RateLimiter::per_minute(config.rate_limit_per_minute),
            config,
            template: PromptTemplate::default(),
        })
    }

    /// HTTP gateway; the bearer token is read from `api_key_env`.
    pub fn http(config: GatewayConfig) -> Result<Self, GenerationError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                GenerationError::Config(format!("environment variable {var} is not set"))
            })?),
            None => None,
        };
        let backend = HttpChatBackend::new(&config.endpoint, &config.model, api_key, config.timeout)
            .map_err(|e| GenerationError::Config(e.to_string()))?;
        Self::new(Arc::new(backend), config)
    }

    /// Deterministic local gateway serving responses from `dir`.
    pub fn mock(dir: &std::path::Path, mut config: GatewayConfig) -> Result<Self, GenerationError> {
        let backend = FixtureBackend::from_dir(dir)
            .map_err(|e| GenerationError::Config(format!("{}: {e}", dir.display())))?;
        config.rate_limit_per_minute = f64::INFINITY;
        Self::new(Arc::new(backend), config)
    }

    pub fn with_template(mut self, template: PromptTemplate) -> Self {
        self.template = template;
        self
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn template(&self) -> &PromptTemplate {
        &self.template
    }

    /// Runs `request.count` completions, at most `max_concurrency` in flight.
    /// Every requested item yields an [`ItemOutcome`]; failures are reported,
    /// never dropped.
    pub fn generate(&self, request: &GenerationRequest) -> Result<GenerationBatch, GenerationError> {
        if request.seeds.is_empty() {
            return Err(GenerationError::EmptySeeds);
        }
        if request.count == 0 {
            return Err(GenerationError::ZeroCount);
        }
        for seed in &request.seeds {
            seed.check_invariants()
                .map_err(|e| GenerationError::InvalidSeed(format!("{}: {e}", seed.id)))?;
        }
        let prompt = self.template.render(&request.seeds, &request.scenario);
        let slug = scenario_slug(&request.scenario);
        let workers = self.config.max_concurrency.min(request.count);
        let next = AtomicUsize::new(0);
        let slots: Mutex<Vec<Option<ItemOutcome>>> =
            Mutex::new((0..request.count).map(|_| None).collect());

        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= request.count {
                        break;
                    }
                    let call = ChatCall {
                        request_id: format!("{}{slug}-{i}", request.id_prefix),
                        scenario: request.scenario.clone(),
                        messages: vec![ChatMessage::user(prompt.clone())],
                        sampling: request.sampling,
                    };
                    let outcome = self.run_one(call);
                    slots.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(outcome);
                });
            }
        });

        let items = slots
            .into_inner()
            .unwrap_or_else(|p| p.into_inner())
            .into_iter()
            .map(|s| s.expect("every index is claimed by a worker"))
            .collect();
        Ok(GenerationBatch {
            scenario: request.scenario.clone(),
            items,
        })
    }

    fn run_one(&self, call: ChatCall) -> ItemOutcome {
        let started = Instant::now();
        let attempted = self
            .config
            .retry
            .run(Some(&self.limiter), |_| self.backend.complete(&call));
        let result = match attempted.result {
            Ok(reply) => Ok(RawGeneration {
                request_id: call.request_id.clone(),
                scenario: call.scenario.clone(),
                raw_text: reply.text,
                token_usage: reply.usage,
                latency: started.elapsed(),
            }),
            Err(e) => Err(GenerationError::from_backend(e, attempted.attempts)),
        };
        ItemOutcome {
            request_id: call.request_id,
            attempts: attempted.attempts,
            retries: attempted.retried,
            result,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Strategy, Utterance};
    use crate::generation::backend::ChatReply;
    use std::sync::atomic::AtomicU32;

    fn seed() -> Dialogue {
        Dialogue::new(
            "Academic Stress",
            "Finals",
            vec![Utterance::user("help"), Utterance::ai(Strategy::Clarification, "What happened?")],
        )
    }

    fn request(count: usize) -> GenerationRequest {
        GenerationRequest {
            scenario: "Academic Stress".into(),
            seeds: vec![seed()],
            count,
            sampling: Sampling::default(),
            id_prefix: "it0-".into(),
        }
    }

    fn fast_config(max_attempts: u32, max_concurrency: usize) -> GatewayConfig {
        GatewayConfig {
            max_concurrency,
            retry: RetryPolicy {
                max_attempts,
                base_backoff: Duration::from_millis(1),
                max_backoff: Duration::from_millis(2),
            },
            rate_limit_per_minute: f64::INFINITY,
            ..GatewayConfig::default()
        }
    }

    struct Canned;
    impl ChatBackend for Canned {
        fn complete(&self, _: &ChatCall) -> Result<ChatReply, BackendError> {
            Ok(ChatReply { text: "canned".into(), usage: Some(TokenUsage { input: 10, output: 3 }) })
        }
    }

    struct FlakyTwice(AtomicU32);
    impl ChatBackend for FlakyTwice {
        fn complete(&self, _: &ChatCall) -> Result<ChatReply, BackendError> {
            if self.0.fetch_add(1, Ordering::SeqCst) < 2 {
                Err(BackendError::Status { status: 503, body: "busy".into() })
            } else {
                Ok(ChatReply { text: "ok".into(), usage: None })
            }
        }
    }

    struct Unauthorized(AtomicU32);
    impl ChatBackend for Unauthorized {
        fn complete(&self, _: &ChatCall) -> Result<ChatReply, BackendError> {
            self.0.fetch_add(1, Ordering::SeqCst);
            Err(BackendError::Auth { status: 401 })
        }
    }

    #[test]
    fn canned_batch() {
        let gw = Gateway::new(Arc::new(Canned), fast_config(3, 2)).unwrap();
        let batch = gw.generate(&request(3)).unwrap();
        assert_eq!(batch.success_count(), 3);
        assert_eq!(batch.usage(), TokenUsage { input: 30, output: 9 });
        let ids: Vec<_> = batch.items.iter().map(|i| i.request_id.as_str()).collect();
        assert_eq!(ids, ["it0-academic-stress-0", "it0-academic-stress-1", "it0-academic-stress-2"]);
    }

    #[test]
    fn retries_transient_failures() {
        let gw = Gateway::new(Arc::new(FlakyTwice(AtomicU32::new(0))), fast_config(3, 1)).unwrap();
        let batch = gw.generate(&request(1)).unwrap();
        let item = &batch.items[0];
        assert!(item.result.is_ok());
        assert_eq!(item.attempts, 3);
        assert_eq!(item.retries.len(), 2);
    }

    #[test]
    fn exhausted_retries_report_status() {
        let gw = Gateway::new(Arc::new(FlakyTwice(AtomicU32::new(0))), fast_config(2, 1)).unwrap();
        let batch = gw.generate(&request(1)).unwrap();
        match &batch.items[0].result {
            Err(GenerationError::Provider { status: Some(503), attempts: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn auth_is_not_retried() {
        let backend = Arc::new(Unauthorized(AtomicU32::new(0)));
        let gw = Gateway::new(backend.clone(), fast_config(5, 1)).unwrap();
        let batch = gw.generate(&request(2)).unwrap();
        assert_eq!(batch.failure_count(), 2);
        for item in &batch.items {
            assert!(matches!(item.result, Err(GenerationError::Auth { status: 401 })));
            assert_eq!(item.attempts, 1);
        }
        assert_eq!(backend.0.load(Ordering::SeqCst), 2);
    }

    #[test]
    fn request_validation() {
        let gw = Gateway::new(Arc::new(Canned), fast_config(1, 1)).unwrap();
        assert!(matches!(gw.generate(&request(0)), Err(GenerationError::ZeroCount)));
        let mut r = request(1);
        r.seeds.clear();
        assert!(matches!(gw.generate(&r), Err(GenerationError::EmptySeeds)));
    }

    #[test]
    fn config_checks() {
        let mut cfg = GatewayConfig::default();
        cfg.retry.max_attempts = 0;
        assert!(cfg.check().is_err());
        let cfg = GatewayConfig::from_toml(
            "endpoint = \"http://localhost:1/v1\"\nmax_concurrency = 8\nrate_limit_per_minute = 30\n[retry]\nmax_attempts = 2\nbase_backoff = 250\n",
        )
        .unwrap();
        assert_eq!(cfg.max_concurrency, 8);
        assert_eq!(cfg.retry.base_backoff, Duration::from_millis(250));
        assert!(GatewayConfig::from_toml("rate_limit_per_minute = 0").is_err());
    }
}
