//! JSON API under `/api`.
//!
//! | method | path                                      | body / result                      |
//! |--------|-------------------------------------------|------------------------------------|
//! | GET    | /api/health                               | `{status}`                         |
//! | GET    | /api/meta                                 | styles, emotions, themes, defaults |
//! | POST   | /api/generate                             | full-text candidates               |
//! | POST   | /api/continue                             | next-lines candidates              |
//! | POST   | /api/revise                               | span suggestions                   |
//! | GET    | /api/drafts                               | draft summaries                    |
//! | POST   | /api/drafts                               | `{title}` → summary                |
//! | GET    | /api/drafts/{id}                          | draft with all versions            |
//! | POST   | /api/drafts/{id}/versions                 | `{lyrics, spec?, provenance}`      |
//! | GET    | /api/drafts/{id}/versions/{n}             | one version                        |
//! | POST   | /api/drafts/{id}/versions/{n}/restore     | copy of version n as the latest    |
//!
//! Errors are `{"error": {"code", "message", "field"?}}`.

use std::sync::Arc;
use std::time::Duration;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use lyricist_core::corpus::Emotion;
use lyricist_core::pipeline::{GenerationOutcome, RevisionOutcome, RevisionRequest, Span};
use lyricist_core::rank::Candidate;
use lyricist_core::store::{Provenance, Store};
use lyricist_core::{ControlSpec, Engine, Error, GenerationOptions, LyricsText};
use serde::{Deserialize, Serialize};
use serde_json::json;

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: Arc<Store>,
    pub defaults: GenerationOptions,
    pub timeout: Duration,
}

#[derive(Debug)]
pub enum ApiError {
    Core(Error),
    BadBody(String),
    Timeout(Duration),
    Internal(String),
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError::Core(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadBody(e.body_text())
    }
}

pub fn status_for(e: &Error) -> StatusCode {
    match e {
        Error::Input(_) | Error::Validation { .. } | Error::Format(_) => StatusCode::BAD_REQUEST,
        Error::ConstraintUnsatisfiable { .. } => StatusCode::UNPROCESSABLE_ENTITY,
        Error::NotFound(_) => StatusCode::NOT_FOUND,
        Error::GenerationExhausted { .. } => StatusCode::CONFLICT,
        Error::BackendUnavailable(_) => StatusCode::SERVICE_UNAVAILABLE,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, body) = match &self {
            ApiError::Core(e) => {
                let mut err = json!({"code": e.code(), "message": e.to_string()});
                match e {
                    Error::Validation { field, .. } => err["field"] = json!(field),
                    Error::ConstraintUnsatisfiable { constraint, .. } => err["field"] = json!(constraint),
                    Error::GenerationExhausted { diagnostics, .. } => err["diagnostics"] = json!(diagnostics),
                    _ => {}
                }
                (status_for(e), err)
            }
            ApiError::BadBody(msg) => (StatusCode::BAD_REQUEST, json!({"code": "invalid_body", "message": msg})),
            ApiError::Timeout(d) => (
                StatusCode::SERVICE_UNAVAILABLE,
                json!({"code": "timeout", "message": format!("generation exceeded {} ms", d.as_millis())}),
            ),
            ApiError::Internal(msg) => {
                (StatusCode::INTERNAL_SERVER_ERROR, json!({"code": "internal", "message": msg}))
            }
        };
        if status.is_server_error() {
            tracing::warn!(status = status.as_u16(), "{}", body["message"]);
        }
        (status, Json(json!({ "error": body }))).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Per-request overrides of the configured generation defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_candidates: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
}

impl Overrides {
    /// Fills in a seed if the caller gave none, then applies the overrides.
    /// Drawn seeds stay below 2^53 so JavaScript clients can echo them.
    fn resolve(&mut self, defaults: &GenerationOptions) -> GenerationOptions {
        let seed = *self.seed.get_or_insert_with(|| rand::random::<u64>() >> 11);
        let mut opts = defaults.clone();
        opts.seed = seed;
        if let Some(n) = self.n_candidates {
            opts.n_candidates = n;
        }
        if let Some(k) = self.top_k {
            opts.sampling.top_k = k;
        }
        if let Some(t) = self.temperature {
            opts.sampling.temperature = t;
        }
        opts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateBody {
    #[serde(flatten)]
    pub spec: ControlSpec,
    #[serde(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinueBody {
    #[serde(flatten)]
    pub spec: ControlSpec,
    pub preceding: Vec<String>,
    pub k_lines: usize,
    #[serde(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviseBody {
    pub lyrics: Vec<String>,
    pub span: Span,
    pub style: String,
    #[serde(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Serialize)]
pub struct GenerateResponse<B> {
    /// The request as interpreted, seed included.
    pub request: B,
    pub seed: u64,
    pub backend: String,
    pub source: String,
    pub keywords: Vec<String>,
    pub candidates: Vec<Candidate>,
    pub rejected: Vec<Candidate>,
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preceding: Option<Vec<String>>,
}

#[derive(Debug, Serialize)]
pub struct ReviseResponse {
    pub request: ReviseBody,
    pub seed: u64,
    pub backend: String,
    #[serde(flatten)]
    pub outcome: RevisionOutcome,
}

#[derive(Debug, Deserialize)]
pub struct NewDraft {
    pub title: String,
}

#[derive(Debug, Deserialize)]
pub struct NewVersion {
    pub lyrics: Vec<String>,
    #[serde(default)]
    pub spec: Option<ControlSpec>,
    pub provenance: Provenance,
}

async fn blocking<T, F>(state: &AppState, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce() -> lyricist_core::Result<T> + Send + 'static,
{
    let task = tokio::task::spawn_blocking(f);
    match tokio::time::timeout(state.timeout, task).await {
        Err(_) => Err(ApiError::Timeout(state.timeout)),
        Ok(Err(join)) => Err(ApiError::Internal(format!("worker failed: {join}"))),
        Ok(Ok(r)) => r.map_err(ApiError::from),
    }
}

fn response<B>(engine: &Engine, request: B, seed: u64, outcome: GenerationOutcome, preceding: Option<Vec<String>>) -> GenerateResponse<B> {
    GenerateResponse {
        request,
        seed,
        backend: engine.backend().name().to_string(),
        source: outcome.source,
        keywords: outcome.keywords,
        candidates: outcome.candidates,
        rejected: outcome.rejected,
        rounds: outcome.rounds,
        preceding,
    }
}

async fn generate(
    State(state): State<AppState>,
    body: Result<Json<GenerateBody>, JsonRejection>,
) -> ApiResult<GenerateResponse<GenerateBody>> {
    let Json(mut body) = body?;
    let opts = body.overrides.resolve(&state.defaults);
    let engine = state.engine.clone();
    let spec = body.spec.clone();
    let outcome = blocking(&state, move || engine.generate_full(&spec, &opts)).await?;
    let seed = body.overrides.seed.unwrap_or_default();
    Ok(Json(response(&state.engine, body, seed, outcome, None)))
}

async fn continue_lines(
    State(state): State<AppState>,
    body: Result<Json<ContinueBody>, JsonRejection>,
) -> ApiResult<GenerateResponse<ContinueBody>> {
    let Json(mut body) = body?;
    let opts = body.overrides.resolve(&state.defaults);
    let engine = state.engine.clone();
    let (spec, preceding, k) = (body.spec.clone(), LyricsText::new(body.preceding.clone()), body.k_lines);
    let outcome = blocking(&state, move || engine.generate_continuation(&spec, &preceding, k, &opts)).await?;
    let seed = body.overrides.seed.unwrap_or_default();
    let preceding = Some(body.preceding.clone());
    Ok(Json(response(&state.engine, body, seed, outcome, preceding)))
}

async fn revise(
    State(state): State<AppState>,
    body: Result<Json<ReviseBody>, JsonRejection>,
) -> ApiResult<ReviseResponse> {
    let Json(mut body) = body?;
    let opts = body.overrides.resolve(&state.defaults);
    let engine = state.engine.clone();
    let req = RevisionRequest { lyrics: LyricsText::new(body.lyrics.clone()), span: body.span, style: body.style.clone() };
    let outcome = blocking(&state, move || engine.revise(&req, &opts)).await?;
    Ok(Json(ReviseResponse {
        seed: body.overrides.seed.unwrap_or_default(),
        backend: state.engine.backend().name().to_string(),
        request: body,
        outcome,
    }))
}

async fn meta(State(state): State<AppState>) -> Json<serde_json::Value> {
    let b = state.engine.bundle();
    let mut defaults = state.defaults.clone();
    defaults.seed = 0;
    Json(json!({
        "styles": b.styles,
        "emotions": Emotion::ALL,
        "themes": b.themes.names().collect::<Vec<_>>(),
        "rhyme_groups": b.usable_rhyme_groups(),
        "backend": state.engine.backend().name(),
        "vocab_size": b.vocab().len(),
        "vocab_hash": b.vocab().hash(),
        "defaults": {
            "n_candidates": defaults.n_candidates,
            "top_k": defaults.sampling.top_k,
            "temperature": defaults.sampling.temperature,
            "weights": defaults.weights,
        },
    }))
}

async fn health() -> Json<serde_json::Value> {
    Json(json!({"status": "ok"}))
}

async fn list_drafts(State(state): State<AppState>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!({ "drafts": state.store.list_drafts() })))
}

async fn create_draft(
    State(state): State<AppState>,
    body: Result<Json<NewDraft>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let Json(body) = body?;
    let store = state.store.clone();
    let summary = blocking(&state, move || store.create_draft(&body.title)).await?;
    Ok((StatusCode::CREATED, Json(json!(summary))))
}

async fn get_draft(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(state.store.get_draft(&id)?)))
}

async fn append_version(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<NewVersion>, JsonRejection>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let Json(body) = body?;
    let store = state.store.clone();
    let v = blocking(&state, move || {
        store.append_version(&id, LyricsText::new(body.lyrics), body.spec, body.provenance)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(json!(v))))
}

async fn get_version(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, u32)>,
) -> ApiResult<serde_json::Value> {
    Ok(Json(json!(state.store.get_version(&id, n)?)))
}

async fn restore_version(
    State(state): State<AppState>,
    Path((id, n)): Path<(String, u32)>,
) -> Result<(StatusCode, Json<serde_json::Value>), ApiError> {
    let store = state.store.clone();
    let v = blocking(&state, move || store.restore(&id, n)).await?;
    Ok((StatusCode::CREATED, Json(json!(v))))
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/meta", get(meta))
        .route("/api/generate", post(generate))
        .route("/api/continue", post(continue_lines))
        .route("/api/revise", post(revise))
        .route("/api/drafts", get(list_drafts).post(create_draft))
        .route("/api/drafts/{id}", get(get_draft))
        .route("/api/drafts/{id}/versions", post(append_version))
        .route("/api/drafts/{id}/versions/{n}", get(get_version))
        .route("/api/drafts/{id}/versions/{n}/restore", post(restore_version))
        .with_state(state)
}
