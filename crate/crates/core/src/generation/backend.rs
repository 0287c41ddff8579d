//! Chat-completion transports: an HTTP client for OpenAI-compatible
//! endpoints and a deterministic fixture responder.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::net::{parse_retry_after, Retryable};

use super::cost::TokenUsage;
use super::Sampling;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// One completion call. `scenario` is routing metadata for local
/// responders; it is not sent over the wire.
#[derive(Debug, Clone)]
pub struct ChatCall {
    pub request_id: String,
    pub scenario: String,
    pub messages: Vec<ChatMessage>,
    pub sampling: Sampling,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChatReply {
    pub text: String,
    pub usage: Option<TokenUsage>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BackendError {
    #[error("authentication failed (HTTP {status})")]
    Auth { status: u16 },
    #[error("rate limited")]
    RateLimited { retry_after: Option<Duration> },
    #[error("HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("transport error: {0}")]
    Transport(String),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
}

impl BackendError {
    pub fn from_status(status: u16, body: String, retry_after: Option<Duration>) -> Self {
        match status {
            401 | 403 => BackendError::Auth { status },
            429 => BackendError::RateLimited { retry_after },
            _ => BackendError::Status { status, body },
        }
    }

    pub fn status(&self) -> Option<u16> {
        match self {
            BackendError::Auth { status } | BackendError::Status { status, .. } => Some(*status),
            BackendError::RateLimited { .. } => Some(429),
            _ => None,
        }
    }
}

impl Retryable for BackendError {
    fn is_retryable(&self) -> bool {
        match self {
            BackendError::RateLimited { .. } | BackendError::Transport(_) => true,
            BackendError::Status { status, .. } => *status >= 500 || *status == 408,
            BackendError::Auth { .. } | BackendError::InvalidResponse(_) => false,
        }
    }

    fn retry_after(&self) -> Option<Duration> {
        match self {
            BackendError::RateLimited { retry_after } => *retry_after,
            _ => None,
        }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, call: &ChatCall) -> Result<ChatReply, BackendError>;
}

/// OpenAI-style `chat/completions` client.
pub struct HttpChatBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

impl HttpChatBackend {
    pub fn new(
        endpoint: impl Into<String>,
        model: impl Into<String>,
        api_key: Option<String>,
        timeout: Duration,
    ) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
        })
    }
}

#[derive(Deserialize)]
struct CompletionBody {
    choices: Vec<Choice>,
    usage: Option<UsageBody>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct UsageBody {
    prompt_tokens: u64,
    completion_tokens: u64,
}

/// Extracts the first choice's text and usage from a completion response.
pub fn parse_completion_body(body: &str) -> Result<ChatReply, BackendError> {
    let parsed: CompletionBody =
        serde_json::from_str(body).map_err(|e| BackendError::InvalidResponse(e.to_string()))?;
    let text = parsed
        .choices
        .into_iter()
        .next()
        .and_then(|c| c.message.content)
        .ok_or_else(|| BackendError::InvalidResponse("no choices in response".into()))?;
    Ok(ChatReply {
        text,
        usage: parsed.usage.map(|u| TokenUsage {
            input: u.prompt_tokens,
            output: u.completion_tokens,
        }),
    })
}

impl ChatBackend for HttpChatBackend {
    fn complete(&self, call: &ChatCall) -> Result<ChatReply, BackendError> {
        let body = json!({
            "model": self.model,
            "messages": call.messages,
            "temperature": call.sampling.temperature,
            "max_tokens": call.sampling.max_tokens,
        });
        let mut req = self.client.post(&self.endpoint).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = parse_retry_after(
            resp.headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok()),
        );
        let text = resp.text().map_err(|e| BackendError::Transport(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(BackendError::from_status(status, text, retry_after));
        }
        parse_completion_body(&text)
    }
}

/// Serves canned responses from a directory.
///
/// Each regular file is one response, except `*.jsonl` files which hold one
/// response per non-blank line. If a subdirectory named after the scenario
/// slug exists its responses are used for that scenario, otherwise the
/// top-level ones. Responses are handed out in sorted order and cycle, with
/// an independent cursor per scenario.
pub struct FixtureBackend {
    shared: Vec<String>,
    by_scenario: HashMap<String, Vec<String>>,
    cursors: Mutex<HashMap<String, usize>>,
}

impl FixtureBackend {
    pub fn from_dir(dir: &Path) -> std::io::Result<Self> {
        let mut shared = Vec::new();
        let mut by_scenario = HashMap::new();
        for path in sorted_entries(dir)? {
            if path.is_dir() {
                let mut responses = Vec::new();
                for file in sorted_entries(&path)? {
                    if file.is_file() {
                        read_responses(&file, &mut responses)?;
                    }
                }
                let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
                by_scenario.insert(name, responses);
            } else if path.is_file() {
                read_responses(&path, &mut shared)?;
            }
        }
        Ok(Self::from_parts(shared, by_scenario))
    }

    pub fn from_responses(responses: Vec<String>) -> Self {
        Self::from_parts(responses, HashMap::new())
    }

    fn from_parts(shared: Vec<String>, by_scenario: HashMap<String, Vec<String>>) -> Self {
        Self {
            shared,
            by_scenario,
            cursors: Mutex::new(HashMap::new()),
        }
    }

    pub fn response_count(&self) -> usize {
        self.shared.len() + self.by_scenario.values().map(Vec::len).sum::<usize>()
    }
}

fn sorted_entries(dir: &Path) -> std::io::Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()?;
    entries.sort();
    Ok(entries)
}

fn read_responses(path: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
    let text = fs::read_to_string(path)?;
    if path.extension().is_some_and(|e| e == "jsonl") {
        out.extend(text.lines().filter(|l| !l.trim().is_empty()).map(str::to_string));
    } else {
        out.push(text);
    }
    Ok(())
}

/// Lowercase alphanumeric slug with single dashes.
pub fn scenario_slug(name: &str) -> String {
    let mut slug = String::new();
    for c in name.chars() {
        if c.is_alphanumeric() {
            slug.extend(c.to_lowercase());
        } else if !slug.ends_with('-') && !slug.is_empty() {
            slug.push('-');
        }
    }
    slug.trim_end_matches('-').to_string()
}

fn approx_tokens(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

impl ChatBackend for FixtureBackend {
    fn complete(&self, call: &ChatCall) -> Result<ChatReply, BackendError> {
        let slug = scenario_slug(&call.scenario);
        let (key, pool) = match self.by_scenario.get(&slug) {
            Some(pool) if !pool.is_empty() => (slug, pool),
            _ => (String::new(), &self.shared),
        };
        if pool.is_empty() {
            return Err(BackendError::InvalidResponse(format!(
                "no fixture responses for scenario {:?}",
                call.scenario
            )));
        }
        let index = {
            let mut cursors = self.cursors.lock().unwrap_or_else(|p| p.into_inner());
            let cursor = cursors.entry(key).or_insert(0);
            let i = *cursor;
            *cursor += 1;
            i
        };
        let text = pool[index % pool.len()].clone();
        let input = call.messages.iter().map(|m| approx_tokens(&m.content)).sum();
        Ok(ChatReply {
            usage: Some(TokenUsage {
                input,
                output: approx_tokens(&text),
            }),
            text,
        })
    }
}
