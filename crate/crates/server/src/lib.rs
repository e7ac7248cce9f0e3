//! HTTP front end for [`chainclust::Session`]: create a session from a data file or inline
//! rows, drive it with commands, and read the views a plotting client needs.
//!
//! Every JSON payload carries `"schema": 1`. Errors come back as
//! `{"schema": 1, "error": {"code": ..., "message": ..., "field": ...}}` with status 404
//! (unknown session), 409 (command issued before its stage) or 422 (invalid input).

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use chainclust::io::{classify_table, read_labels, LoadOptions};
use chainclust::session::{ExportKind, SCHEMA_VERSION};
use chainclust::{load_data, Command, Error, Session};

/// Body of `POST /sessions`. Exactly one of `path` and `rows` must be given; `rows` is
/// classified like a file (square with zero diagonal means distances).
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateSession {
    pub path: Option<PathBuf>,
    pub rows: Option<Vec<Vec<f64>>>,
    pub options: LoadOptions,
    pub standardize: bool,
    pub truth: Option<Vec<i64>>,
    pub truth_path: Option<PathBuf>,
    pub truth_column: usize,
}

impl CreateSession {
    fn build(self) -> Result<Session, ApiError> {
        let precision = self.options.precision;
        let loaded = match (self.path, self.rows) {
            (Some(path), None) => load_data(path, &self.options)?,
            (None, Some(rows)) => classify_table(rows, precision)?,
            _ => return Err(ApiError::invalid("path", "give exactly one of `path` and `rows`")),
        };
        let matrix = loaded.into_matrix(self.standardize, precision)?;
        let truth = match (self.truth, self.truth_path) {
            (t, None) => t,
            (None, Some(p)) => Some(read_labels(p, self.truth_column, &self.options)?),
            (Some(_), Some(_)) => {
                return Err(ApiError::invalid("truth", "give at most one of `truth` and `truth_path`"))
            }
        };
        Ok(Session::new(matrix, truth)?)
    }
}

type Shared = Arc<RwLock<Session>>;

/// Live sessions keyed by id.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<BTreeMap<u64, Shared>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    fn insert(&self, session: Session) -> u64 {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed) + 1;
        self.sessions
            .write()
            .expect("session map poisoned")
            .insert(id, Arc::new(RwLock::new(session)));
        id
    }

    fn get(&self, id: u64) -> Result<Shared, ApiError> {
        self.sessions
            .read()
            .expect("session map poisoned")
            .get(&id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(format!("no session {id}")))
    }
}

/// Error response with a status code and a machine-readable code.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
    field: Option<&'static str>,
}

impl ApiError {
    fn invalid(field: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            code: "invalid",
            message: message.into(),
            field: Some(field),
        }
    }

    fn not_found(message: String) -> Self {
        ApiError {
            status: StatusCode::NOT_FOUND,
            code: "not_found",
            message,
            field: None,
        }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (status, code, field) = match e {
            Error::StageConflict { .. } => (StatusCode::CONFLICT, "stage_conflict", None),
            Error::InvalidParameter { field, .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", Some(field)),
            Error::StencilTooLarge { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", Some("stencil_pct")),
            Error::UnknownCluster { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", Some("pairs")),
            Error::LengthMismatch { .. } => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", Some("truth")),
            _ => (StatusCode::UNPROCESSABLE_ENTITY, "invalid", None),
        };
        ApiError {
            status,
            code,
            message,
            field,
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({
            "schema": SCHEMA_VERSION,
            "error": {"code": self.code, "message": self.message, "field": self.field},
        });
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::invalid("body", e.to_string()))
}

fn to_json(value: impl Serialize) -> Json<Value> {
    Json(serde_json::to_value(value).expect("views serialize"))
}

/// Runs `f` on the session off the async executor.
async fn with_session<T, F>(state: &AppState, id: u64, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> ApiResult<T> + Send + 'static,
{
    let shared = state.get(id)?;
    tokio::task::spawn_blocking(move || f(&mut shared.write().expect("session poisoned")))
        .await
        .expect("session task panicked")
}

async fn read_session<T, F>(state: &AppState, id: u64, f: F) -> ApiResult<T>
where
    T: Send + 'static,
    F: FnOnce(&Session) -> ApiResult<T> + Send + 'static,
{
    let shared = state.get(id)?;
    tokio::task::spawn_blocking(move || f(&shared.read().expect("session poisoned")))
        .await
        .expect("session task panicked")
}

async fn create(State(state): State<AppState>, body: Bytes) -> ApiResult<(StatusCode, Json<Value>)> {
    let req: CreateSession = parse_body(&body)?;
    let session = tokio::task::spawn_blocking(move || req.build())
        .await
        .expect("load task panicked")?;
    let view = session.state();
    let id = state.insert(session);
    Ok((
        StatusCode::CREATED,
        Json(json!({"schema": SCHEMA_VERSION, "id": id, "state": view})),
    ))
}

async fn list(State(state): State<AppState>) -> Json<Value> {
    let ids: Vec<u64> = state.sessions.read().expect("session map poisoned").keys().copied().collect();
    Json(json!({"schema": SCHEMA_VERSION, "sessions": ids}))
}

async fn remove(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<StatusCode> {
    match state.sessions.write().expect("session map poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("no session {id}"))),
    }
}

async fn command(State(state): State<AppState>, Path(id): Path<u64>, body: Bytes) -> ApiResult<Json<Value>> {
    let cmd: Command = parse_body(&body)?;
    let view = with_session(&state, id, move |s| {
        s.apply(cmd)?;
        Ok(s.state())
    })
    .await?;
    Ok(to_json(view))
}

async fn state_view(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| Ok(to_json(s.state()))).await
}

async fn delta(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| Ok(to_json(s.delta_view()?))).await
}

async fn scan(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| Ok(to_json(s.scan_view()?))).await
}

async fn clusters(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| Ok(to_json(s.clusters_view()?))).await
}

async fn confusion(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| Ok(to_json(s.confusion_view()?))).await
}

async fn history(State(state): State<AppState>, Path(id): Path<u64>) -> ApiResult<Json<Value>> {
    read_session(&state, id, |s| {
        Ok(Json(json!({"schema": SCHEMA_VERSION, "commands": s.history()})))
    })
    .await
}

#[derive(Debug, Deserialize)]
struct TileQuery {
    x: usize,
    y: usize,
    #[serde(default)]
    zoom: u32,
}

async fn tile(
    State(state): State<AppState>,
    Path(id): Path<u64>,
    query: Result<Query<TileQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(q) = query.map_err(|e| ApiError::invalid("query", e.body_text()))?;
    read_session(&state, id, move |s| Ok(to_json(s.tile(q.x, q.y, q.zoom)?))).await
}

async fn export(State(state): State<AppState>, Path((id, kind)): Path<(u64, String)>) -> ApiResult<Response> {
    let kind: ExportKind = kind.parse()?;
    let text = read_session(&state, id, move |s| Ok(s.export(kind)?)).await?;
    let content_type = match kind {
        ExportKind::Labels => "text/csv; charset=utf-8",
        ExportKind::Indices | ExportKind::Order => "text/plain; charset=utf-8",
    };
    Ok(([(header::CONTENT_TYPE, content_type)], text).into_response())
}

/// All routes over a fresh, empty session store.
pub fn router() -> Router {
    router_with_state(AppState::default())
}

pub fn router_with_state(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", axum::routing::delete(remove))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/state", get(state_view))
        .route("/sessions/{id}/delta", get(delta))
        .route("/sessions/{id}/scan", get(scan))
        .route("/sessions/{id}/clusters", get(clusters))
        .route("/sessions/{id}/confusion", get(confusion))
        .route("/sessions/{id}/history", get(history))
        .route("/sessions/{id}/matrix/tile", get(tile))
        .route("/sessions/{id}/export/{kind}", get(export))
        .with_state(state)
}

/// Serves the API on `addr` until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router()).await
}
