use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::generation::BackendError;
use crate::net::{millis, parse_retry_after, RateLimiter, RetryPolicy};

use super::{SafetyError, ToxicityScorer, ToxicityScores, ATTRIBUTES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerspectiveConfig {
    pub endpoint: String,
    /// Environment variable holding the API key, sent as `?key=`.
    pub api_key_env: Option<String>,
    pub retry: RetryPolicy,
    pub rate_limit_per_minute: f64,
    #[serde(with = "millis")]
    pub timeout: Duration,
    pub languages: Vec<String>,
}

impl Default for PerspectiveConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze".into(),
            api_key_env: Some("PERSPECTIVE_API_KEY".into()),
            retry: RetryPolicy::default(),
            rate_limit_per_minute: 60.0,
            timeout: Duration::from_secs(30),
            languages: vec!["en".into()],
        }
    }
}

fn wire_name(attribute: &str) -> String {
    attribute.to_ascii_uppercase()
}

pub fn perspective_request_body(text: &str, languages: &[String]) -> Value {
    let requested: serde_json::Map<String, Value> =
        ATTRIBUTES.iter().map(|a| (wire_name(a), json!({}))).collect();
    json!({
        "comment": { "text": text },
        "languages": languages,
        "requestedAttributes": requested,
        "doNotStore": true,
    })
}

/// Reads `attributeScores.<ATTR>.summaryScore.value` for all six attributes.
pub fn parse_perspective_response(body: &str) -> Result<ToxicityScores, BackendError> {
    let v: Value = serde_json::from_str(body).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
    let mut values = [0.0; 6];
    for (slot, attr) in values.iter_mut().zip(ATTRIBUTES) {
        *slot = v
            .pointer(&format!("/attributeScores/{}/summaryScore/value", wire_name(attr)))
            .and_then(Value::as_f64)
            .ok_or_else(|| BackendError::InvalidResponse(format!("missing {} score", wire_name(attr))))?;
    }
    ToxicityScores::new(values).map_err(|e| BackendError::InvalidResponse(e.to_string()))
}

/// Blocking client for the Perspective comment analyzer.
pub struct PerspectiveScorer {
    client: reqwest::blocking::Client,
    config: PerspectiveConfig,
    api_key: Option<String>,
    limiter: RateLimiter,
}

impl PerspectiveScorer {
    pub fn new(config: PerspectiveConfig) -> Result<Self, SafetyError> {
        let api_key = match &config.api_key_env {
            Some(var) => Some(
                std::env::var(var).map_err(|_| SafetyError::Config(format!("environment variable {var} is not set")))?,
            ),
            None => None,
        };
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| SafetyError::Config(e.to_string()))?;
        Ok(Self {
            client,
            limiter: RateLimiter::per_minute(config.rate_limit_per_minute),
            api_key,
            config,
        })
    }

    fn call(&self, text: &str) -> Result<ToxicityScores, BackendError> {
        let mut url = reqwest::Url::parse(&self.config.endpoint).map_err(|e| BackendError::Transport(e.to_string()))?;
        if let Some(key) = &self.api_key {
            url.query_pairs_mut().append_pair("key", key);
        }
        let req = self
            .client
            .post(url)
            .json(&perspective_request_body(text, &self.config.languages));
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = parse_retry_after(
            resp.headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok()),
        );
        let body = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::from_status(status, body, retry_after));
        }
        parse_perspective_response(&body)
    }
}

impl ToxicityScorer for PerspectiveScorer {
    fn score(&self, text: &str) -> Result<ToxicityScores, SafetyError> {
        let attempted = self.config.retry.run(Some(&self.limiter), |_| self.call(text));
        attempted
            .result
            .map_err(|e| SafetyError::from_backend(e, attempted.attempts))
    }
}
