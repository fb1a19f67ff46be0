//! Routes and handlers.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::Router;
use serde::Serialize;

use delta_lca_core::eda::Format;
use delta_lca_core::pipeline::Direction;
use delta_lca_core::Engine;

use crate::error::ServiceError;
use crate::session::{RuleDraft, Session, Upload};
use crate::store::SessionStore;

const MAX_UPLOAD_BYTES: usize = 64 * 1024 * 1024;

#[derive(Clone)]
pub struct AppState {
    pub engine: Arc<Engine>,
    pub store: Arc<SessionStore>,
}

impl AppState {
    pub fn new(engine: Engine, store: SessionStore) -> AppState {
        AppState {
            engine: Arc::new(engine),
            store: Arc::new(store),
        }
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/sessions", post(create_session).get(list_sessions))
        .route("/api/sessions/{id}", get(get_session))
        .route("/api/sessions/{id}/rules", post(add_rule))
        .route("/api/sessions/{id}/rules/{rid}", delete(delete_rule))
        .route("/api/sessions/{id}/update", post(update))
        .route("/api/sessions/{id}/inventory/{side}", get(inventory))
        .layer(DefaultBodyLimit::max(MAX_UPLOAD_BYTES))
        .with_state(state)
}

/// Pretty-printed JSON, the same rendering the CLI writes to disk.
pub fn json_response<T: Serialize>(status: StatusCode, body: &T) -> Response {
    match serde_json::to_string_pretty(body) {
        Ok(text) => (status, [(header::CONTENT_TYPE, "application/json")], text).into_response(),
        Err(e) => (StatusCode::INTERNAL_SERVER_ERROR, e.to_string()).into_response(),
    }
}

fn bad(msg: impl Into<String>) -> ServiceError {
    ServiceError::BadRequest(msg.into())
}

#[derive(Default)]
struct CreateForm {
    file_a: Option<(String, Vec<u8>)>,
    file_b: Option<(String, Vec<u8>)>,
    formats: Option<String>,
    format_a: Option<String>,
    format_b: Option<String>,
    direction: Option<String>,
}

async fn read_form(mut multipart: Multipart) -> Result<CreateForm, ServiceError> {
    let mut form = CreateForm::default();
    while let Some(field) = multipart.next_field().await.map_err(|e| bad(e.to_string()))? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let data = field.bytes().await.map_err(|e| bad(e.to_string()))?.to_vec();
        let text = || String::from_utf8_lossy(&data).trim().to_string();
        match name.as_str() {
            "fileA" => form.file_a = Some((file_name.unwrap_or_else(|| "design_a".into()), data)),
            "fileB" => form.file_b = Some((file_name.unwrap_or_else(|| "design_b".into()), data)),
            "formats" => form.formats = Some(text()),
            "formatA" => form.format_a = Some(text()),
            "formatB" => form.format_b = Some(text()),
            "direction" => form.direction = Some(text()),
            other => return Err(bad(format!("unexpected form field `{other}`"))),
        }
    }
    Ok(form)
}

/// `formats` is either one format for both files or `fmtA,fmtB`;
/// `formatA`/`formatB` override it per file.
fn resolve_formats(form: &CreateForm) -> Result<(Format, Format), ServiceError> {
    let parse = |s: &str| s.trim().parse::<Format>().map_err(bad);
    let (mut fa, mut fb) = match form.formats.as_deref() {
        None | Some("") => (Format::Auto, Format::Auto),
        Some(s) => match s.split_once(',') {
            Some((x, y)) => (parse(x)?, parse(y)?),
            None => (parse(s)?, parse(s)?),
        },
    };
    if let Some(s) = &form.format_a {
        fa = parse(s)?;
    }
    if let Some(s) = &form.format_b {
        fb = parse(s)?;
    }
    Ok((fa, fb))
}

async fn create_session(State(state): State<AppState>, multipart: Multipart) -> Result<Response, ServiceError> {
    let form = read_form(multipart).await?;
    let (fa, fb) = resolve_formats(&form)?;
    let direction = match form.direction.as_deref() {
        None | Some("") => Direction::Auto,
        Some(s) => s.parse().map_err(bad)?,
    };
    let (Some((name_a, bytes_a)), Some((name_b, bytes_b))) = (form.file_a, form.file_b) else {
        return Err(bad("both fileA and fileB are required"));
    };
    let a = Upload {
        file_name: name_a,
        bytes: bytes_a,
        format: fa,
    };
    let b = Upload {
        file_name: name_b,
        bytes: bytes_b,
        format: fb,
    };
    let engine = state.engine.clone();
    let store = state.store.clone();
    let summary = tokio::task::spawn_blocking(move || -> Result<_, ServiceError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let session = Session::create(&engine, id, &a, &b, direction)?;
        store.persist(&session)?;
        let summary = session.summary();
        store.insert(session);
        Ok(summary)
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))??;
    Ok(json_response(StatusCode::CREATED, &summary))
}

async fn list_sessions(State(state): State<AppState>) -> Response {
    json_response(StatusCode::OK, &state.store.ids())
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let handle = state.store.get(&id).ok_or(ServiceError::UnknownSession(id))?;
    let session = handle.lock().await;
    Ok(json_response(StatusCode::OK, &*session))
}

async fn inventory(
    State(state): State<AppState>,
    Path((id, side)): Path<(String, String)>,
) -> Result<Response, ServiceError> {
    let handle = state.store.get(&id).ok_or(ServiceError::UnknownSession(id))?;
    let session = handle.lock().await;
    let inv = session
        .inventory(&side)
        .ok_or_else(|| bad(format!("side must be `a` or `b`, not `{side}`")))?;
    Ok(json_response(StatusCode::OK, inv))
}

/// Runs `f` on the session off the async executor, holding the session's
/// lock throughout. On error the session is restored and nothing is
/// persisted.
async fn mutate<T, F>(state: &AppState, id: String, f: F) -> Result<T, ServiceError>
where
    T: Send + 'static,
    F: FnOnce(&Engine, &mut Session) -> Result<T, ServiceError> + Send + 'static,
{
    let handle = state.store.get(&id).ok_or(ServiceError::UnknownSession(id))?;
    let mut guard = handle.lock_owned().await;
    let engine = state.engine.clone();
    let store = state.store.clone();
    tokio::task::spawn_blocking(move || {
        let before = guard.clone();
        let out = f(&engine, &mut guard).and_then(|v| {
            store.persist(&guard)?;
            Ok(v)
        });
        if out.is_err() {
            *guard = before;
        }
        out
    })
    .await
    .map_err(|e| ServiceError::Internal(e.to_string()))?
}

#[derive(Serialize)]
struct RuleCreated {
    rule_id: String,
}

async fn add_rule(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let draft: RuleDraft = serde_json::from_slice(&body).map_err(|e| bad(format!("malformed rule: {e}")))?;
    let rule_id = mutate(&state, id, move |engine, s| s.add_rule(engine, draft)).await?;
    Ok(json_response(StatusCode::CREATED, &RuleCreated { rule_id }))
}

async fn delete_rule(
    State(state): State<AppState>,
    Path((id, rid)): Path<(String, String)>,
) -> Result<Response, ServiceError> {
    mutate(&state, id, move |engine, s| s.delete_rule(engine, &rid)).await?;
    Ok(StatusCode::NO_CONTENT.into_response())
}

async fn update(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ServiceError> {
    let result = mutate(&state, id, |engine, s| s.update(engine).cloned()).await?;
    Ok(json_response(StatusCode::OK, &result))
}
