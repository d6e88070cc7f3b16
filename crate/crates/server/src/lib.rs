//! JSON over HTTP front for [`AnnotationService`].
//!
//! | method | path | body | reply |
//! |--------|------|------|-------|
//! | POST | `/sessions` | session config | `{session_id}` |
//! | GET | `/sessions/{id}/next` | | served item or `{done: true}` |
//! | POST | `/sessions/{id}/attempt` | `{item_id, question}` | attempt result |
//! | POST | `/sessions/{id}/accept` | `{item_id, question}` | the stored pair |
//! | POST | `/sessions/{id}/skip` | `{item_id}` | `{item_id, skipped: true}` |
//! | POST | `/sessions/{id}/close` | | `{session_id, closed: true}` |
//! | GET | `/sessions/{id}/export` | | pair JSONL |
//!
//! Failures reply `{code, message}` with a 4xx or 5xx status. Service calls
//! may block on a model adapter, so each runs on the blocking pool.

use std::io;
use std::path::Path;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tabrobust::annotation::{AnnotationError, AnnotationService, SessionConfig};
use tokio::net::TcpListener;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "bad_request",
            message: message.into(),
        }
    }
}

impl From<AnnotationError> for ApiError {
    fn from(e: AnnotationError) -> Self {
        let status = match &e {
            AnnotationError::Dataset(_) => StatusCode::BAD_REQUEST,
            AnnotationError::UnknownSession(_) => StatusCode::NOT_FOUND,
            AnnotationError::Closed(_) | AnnotationError::UnknownItem(_) | AnnotationError::NoAttempt(_) => {
                StatusCode::CONFLICT
            }
            AnnotationError::Unchanged | AnnotationError::NotFlipped => StatusCode::UNPROCESSABLE_ENTITY,
            AnnotationError::Adapter(_) => StatusCode::BAD_GATEWAY,
            AnnotationError::Persist(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError {
            status,
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::bad_request(r.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message}))).into_response()
    }
}

type Shared = Arc<AnnotationService>;

/// Runs `f` against the service on the blocking pool.
async fn call<T, F>(svc: &Shared, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&AnnotationService) -> Result<T, AnnotationError> + Send + 'static,
{
    let svc = svc.clone();
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            code: "internal",
            message: e.to_string(),
        })?
        .map_err(ApiError::from)
}

#[derive(Deserialize)]
struct AttemptBody {
    item_id: String,
    question: String,
}

#[derive(Deserialize)]
struct SkipBody {
    item_id: String,
}

async fn create(State(svc): State<Shared>, body: Result<Json<SessionConfig>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(config) = body?;
    let id = call(&svc, move |s| s.create_session(config)).await?;
    log::info!("session {id} created");
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))).into_response())
}

async fn next(State(svc): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let item = call(&svc, move |s| s.next_item(&id)).await?;
    Ok(Json(match item {
        Some(item) => serde_json::to_value(item).expect("items serialize"),
        None => json!({"done": true}),
    }))
}

async fn attempt(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AttemptBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(b) = body?;
    let r = call(&svc, move |s| s.submit_attempt(&id, &b.item_id, &b.question)).await?;
    Ok(Json(serde_json::to_value(r).expect("results serialize")))
}

async fn accept(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<AttemptBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(b) = body?;
    let pair = call(&svc, move |s| s.accept(&id, &b.item_id, &b.question)).await?;
    Ok(Json(serde_json::to_value(pair).expect("pairs serialize")))
}

async fn skip(
    State(svc): State<Shared>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<SkipBody>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let Json(b) = body?;
    let item_id = b.item_id.clone();
    call(&svc, move |s| s.skip(&id, &b.item_id)).await?;
    Ok(Json(json!({"item_id": item_id, "skipped": true})))
}

async fn close(State(svc): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Json<Value>, ApiError> {
    let sid = id.clone();
    call(&svc, move |s| s.close(&id)).await?;
    Ok(Json(json!({"session_id": sid, "closed": true})))
}

async fn export(State(svc): State<Shared>, UrlPath(id): UrlPath<String>) -> Result<Response, ApiError> {
    let bytes = call(&svc, move |s| s.export(&id)).await?;
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], bytes).into_response())
}

pub fn router(service: Arc<AnnotationService>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}/next", get(next))
        .route("/sessions/{id}/attempt", post(attempt))
        .route("/sessions/{id}/accept", post(accept))
        .route("/sessions/{id}/skip", post(skip))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/export", get(export))
        .with_state(service)
}

/// Re-registers every session logged under `state_dir`; returns the ids.
pub fn resume_all(service: &AnnotationService, state_dir: &Path) -> Result<Vec<String>, AnnotationError> {
    let mut ids = Vec::new();
    let entries = std::fs::read_dir(state_dir).map_err(|e| AnnotationError::Persist(e.to_string()))?;
    for entry in entries {
        let path = entry.map_err(|e| AnnotationError::Persist(e.to_string()))?.path();
        if path.extension().is_some_and(|x| x == "jsonl") {
            if let Some(id) = path.file_stem().and_then(|s| s.to_str()) {
                service.resume(id)?;
                ids.push(id.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    service: Arc<AnnotationService>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    if let Ok(addr) = listener.local_addr() {
        log::info!("annotation service listening on http://{addr}");
    }
    axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
}
