//! JSON-over-HTTP review queue backed by a running loop controller.
//!
//! | Method | Path                       | Purpose                          |
//! |--------|----------------------------|----------------------------------|
//! | GET    | `/queue`                   | pending dialogues, oldest first  |
//! | GET    | `/dialogues/{id}`          | one dialogue with its status     |
//! | POST   | `/dialogues/{id}/decision` | approve, edit, reject or rate    |
//! | GET    | `/stats`                   | review counters, ratings, kappa  |
//!
//! Every response carries an `X-Schema-Version` header. Any other path is
//! served from the optional static directory holding the built review UI.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderName, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::services::{ServeDir, ServeFile};
use tower_http::set_header::SetResponseHeaderLayer;

use supportloop_core::curation::{
    ControllerHandle, DecisionError, DecisionOutcome, DialogueRecord, DialogueStatus, ReviewDecision, ReviewStats,
};
use supportloop_core::validation::{Issue, ValidationReport};
use supportloop_core::{Dialogue, DialogueId};

pub const SCHEMA_VERSION: &str = "1";
pub const SCHEMA_HEADER: &str = "x-schema-version";
pub const DEFAULT_PAGE: usize = 50;
pub const MAX_PAGE: usize = 500;

#[derive(Clone)]
struct AppState {
    handle: ControllerHandle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueueItem {
    pub dialogue_id: DialogueId,
    pub scenario: String,
    /// Sequence number of the enqueue event; orders the queue and serves
    /// as the pagination cursor.
    pub enqueued_seq: u64,
    pub issues: Vec<Issue>,
    pub duplicate_score: f64,
    pub dialogue: Dialogue,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueuePage {
    pub total: usize,
    pub items: Vec<QueueItem>,
    /// Pass as `after` to fetch the next page; absent on the last page.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_after: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DialogueView {
    pub dialogue_id: DialogueId,
    pub scenario: String,
    pub status: DialogueStatus,
    pub issues: Vec<Issue>,
    pub duplicate_score: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decided_by: Option<String>,
    pub dialogue: Dialogue,
}

impl From<&DialogueRecord> for DialogueView {
    fn from(r: &DialogueRecord) -> Self {
        Self {
            dialogue_id: r.dialogue.id.clone(),
            scenario: r.scenario.clone(),
            status: r.status,
            issues: r.issues.clone(),
            duplicate_score: r.duplicate_score,
            decided_by: r.decided_by.clone(),
            dialogue: r.dialogue.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct StatsBody<'a> {
    iteration: u32,
    #[serde(flatten)]
    stats: &'a ReviewStats,
}

/// Error body: `{"error": code, "message": text, "issues": [...]?}`.
struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    report: Option<Box<ValidationReport>>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        Self { status, code, message: message.into(), report: None }
    }

    fn bad_request(message: impl Into<String>) -> Self {
        Self::new(StatusCode::BAD_REQUEST, "BadRequest", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.code, "message": self.message });
        if let Some(report) = self.report {
            body["verdict"] = json!(report.verdict);
            body["issues"] = json!(report.issues);
        }
        (self.status, Json(body)).into_response()
    }
}

impl From<DecisionError> for ApiError {
    fn from(e: DecisionError) -> Self {
        let message = e.to_string();
        match e {
            DecisionError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "NotFound", message),
            DecisionError::AlreadyDecided { .. } => ApiError::new(StatusCode::CONFLICT, "AlreadyDecided", message),
            DecisionError::Invalid(report) => ApiError {
                status: StatusCode::UNPROCESSABLE_ENTITY,
                code: "ValidationFailed",
                message,
                report: Some(report),
            },
            DecisionError::BadRequest(_) => ApiError::bad_request(message),
            DecisionError::State(inner) => {
                log::error!("decision failed: {inner}");
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", message)
            }
        }
    }
}

fn parse_param<T: std::str::FromStr>(params: &[(String, String)], name: &str) -> Result<Option<T>, ApiError> {
    match params.iter().rev().find(|(k, _)| k == name) {
        None => Ok(None),
        Some((_, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| ApiError::bad_request(format!("invalid value {v:?} for {name}"))),
    }
}

async fn queue(
    State(app): State<AppState>,
    Query(params): Query<Vec<(String, String)>>,
) -> Result<Json<QueuePage>, ApiError> {
    if let Some((k, _)) = params.iter().find(|(k, _)| !matches!(k.as_str(), "limit" | "scenario" | "after")) {
        return Err(ApiError::bad_request(format!("unknown parameter {k:?}")));
    }
    let limit = parse_param::<usize>(&params, "limit")?.unwrap_or(DEFAULT_PAGE);
    if limit == 0 || limit > MAX_PAGE {
        return Err(ApiError::bad_request(format!("limit must be between 1 and {MAX_PAGE}")));
    }
    let after = parse_param::<u64>(&params, "after")?;
    let scenario = parse_param::<String>(&params, "scenario")?;

    let view = app.handle.view();
    let matching: Vec<&Arc<DialogueRecord>> = view
        .pending
        .iter()
        .filter(|r| scenario.as_deref().is_none_or(|s| r.scenario == s))
        .collect();
    let total = matching.len();
    let mut rest = matching
        .into_iter()
        .filter(|r| after.is_none_or(|a| r.enqueued_seq.unwrap_or(0) > a))
        .peekable();
    let items: Vec<QueueItem> = rest
        .by_ref()
        .take(limit)
        .map(|r| QueueItem {
            dialogue_id: r.dialogue.id.clone(),
            scenario: r.scenario.clone(),
            enqueued_seq: r.enqueued_seq.unwrap_or(0),
            issues: r.issues.clone(),
            duplicate_score: r.duplicate_score,
            dialogue: r.dialogue.clone(),
        })
        .collect();
    let next_after = rest.peek().and(items.last().map(|i| i.enqueued_seq));
    Ok(Json(QueuePage { total, items, next_after }))
}

async fn dialogue(State(app): State<AppState>, Path(id): Path<String>) -> Result<Json<DialogueView>, ApiError> {
    let view = app.handle.view();
    let record = view
        .records
        .get(&DialogueId::new(id.clone()))
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "NotFound", format!("unknown dialogue {id}")))?;
    Ok(Json(DialogueView::from(record.as_ref())))
}

async fn decision(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DecisionOutcome>, ApiError> {
    let decision: ReviewDecision =
        serde_json::from_slice(&body).map_err(|e| ApiError::bad_request(format!("malformed decision: {e}")))?;
    let handle = app.handle.clone();
    let outcome = tokio::task::spawn_blocking(move || handle.decide(DialogueId::new(id), decision))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "Internal", e.to_string()))??;
    Ok(Json(outcome))
}

async fn stats(State(app): State<AppState>) -> Json<Value> {
    let view = app.handle.view();
    Json(json!(StatsBody { iteration: view.iteration, stats: &view.stats }))
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "schema_version": SCHEMA_VERSION }))
}

/// Builds the service. With `static_dir`, unmatched paths serve files from
/// it and fall back to its `index.html`.
pub fn router(handle: ControllerHandle, static_dir: Option<PathBuf>) -> Router {
    let mut app = Router::new()
        .route("/queue", get(queue))
        .route("/dialogues/{id}", get(dialogue))
        .route("/dialogues/{id}/decision", post(decision))
        .route("/stats", get(stats))
        .route("/health", get(health))
        .with_state(AppState { handle });
    if let Some(dir) = static_dir {
        let index = dir.join("index.html");
        app = app.fallback_service(ServeDir::new(dir).fallback(ServeFile::new(index)));
    }
    app.layer(SetResponseHeaderLayer::overriding(
        HeaderName::from_static(SCHEMA_HEADER),
        HeaderValue::from_static(SCHEMA_VERSION),
    ))
}

/// Serves until Ctrl-C.
pub async fn serve(handle: ControllerHandle, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review service listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(handle, static_dir))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
