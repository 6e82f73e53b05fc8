//! JSON API: `POST /api/query`, `POST /api/feedback`, `GET /api/suggestions`,
//! `GET /api/stats` and `GET /api/doc/{id}`. Successful bodies are
//! `{"ok": payload}`, failures `{"error": code, "message": text}`.

use std::sync::{Arc, Mutex, MutexGuard};

use axum::body::Bytes;
use axum::extract::{Path, RawQuery, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{Any, CorsLayer};

use crate::engine::Engine;
use crate::error::Error;

/// Results returned when a query omits `k`.
pub const DEFAULT_K: usize = 10;

#[derive(Clone)]
pub struct AppState {
    engine: Arc<Mutex<Engine>>,
    /// Persist after every mutating request.
    autosave: bool,
}

impl AppState {
    pub fn new(engine: Engine, autosave: bool) -> Self {
        AppState {
            engine: Arc::new(Mutex::new(engine)),
            autosave,
        }
    }

    fn lock(&self) -> MutexGuard<'_, Engine> {
        self.engine.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
    }
}

pub fn status_for(error: &Error) -> StatusCode {
    match error {
        Error::UnknownUser(_)
        | Error::UnknownDomain(_)
        | Error::UnknownDocument(_)
        | Error::UnknownCommunity(_)
        | Error::UnknownStrategy(_)
        | Error::UnknownConcept(_) => StatusCode::NOT_FOUND,
        Error::InvalidRating(_) => StatusCode::UNPROCESSABLE_ENTITY,
        Error::InvalidArgument(_) | Error::DuplicateUser(_) | Error::DuplicateDocument(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

struct ApiError(Error);

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({ "error": self.0.code(), "message": self.0.to_string() });
        (status_for(&self.0), Json(body)).into_response()
    }
}

fn ok<T: Serialize>(payload: T) -> Response {
    Json(json!({ "ok": payload })).into_response()
}

fn parse_body<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(Error::InvalidArgument(format!("malformed request body: {e}"))))
}

fn parse_query<T: DeserializeOwned>(query: Option<String>) -> Result<T, ApiError> {
    let pairs: Vec<(String, String)> = url::form_urlencoded::parse(query.unwrap_or_default().as_bytes())
        .into_owned()
        .collect();
    let map: serde_json::Map<String, serde_json::Value> = pairs
        .into_iter()
        .map(|(k, v)| (k, serde_json::Value::String(v)))
        .collect();
    serde_json::from_value(serde_json::Value::Object(map))
        .map_err(|e| ApiError(Error::InvalidArgument(format!("malformed query string: {e}"))))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QueryBody {
    user: String,
    domain: String,
    text: String,
    #[serde(default)]
    k: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackBody {
    user: String,
    doc: String,
    rating: i64,
}

#[derive(Debug, Deserialize)]
struct SuggestionParams {
    user: String,
    domain: String,
    #[serde(default)]
    k: Option<String>,
}

async fn handle_query(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: QueryBody = parse_body(&body)?;
    let mut engine = state.lock();
    let resp = engine.query(&req.user, &req.domain, &req.text, req.k.unwrap_or(DEFAULT_K))?;
    if state.autosave {
        engine.save()?;
    }
    Ok(ok(resp))
}

async fn handle_feedback(State(state): State<AppState>, body: Bytes) -> Result<Response, ApiError> {
    let req: FeedbackBody = parse_body(&body)?;
    let mut engine = state.lock();
    let tau = engine.feedback(&req.user, &req.doc, req.rating)?;
    if state.autosave {
        engine.save()?;
    }
    Ok(ok(json!({ "tau": tau })))
}

async fn handle_suggestions(State(state): State<AppState>, RawQuery(query): RawQuery) -> Result<Response, ApiError> {
    let params: SuggestionParams = parse_query(query)?;
    let k = match params.k {
        None => DEFAULT_K,
        Some(k) => k.parse().map_err(|_| {
            ApiError(Error::InvalidArgument(format!(
                "k must be a non-negative integer, got `{k}`"
            )))
        })?,
    };
    let engine = state.lock();
    Ok(ok(engine.suggest(&params.user, &params.domain, k)?))
}

async fn handle_stats(State(state): State<AppState>) -> Response {
    ok(state.lock().stats())
}

async fn handle_doc(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(ok(state.lock().doc(&id)?))
}

async fn fallback() -> Response {
    let body = json!({ "error": "NotFound", "message": "no such endpoint" });
    (StatusCode::NOT_FOUND, Json(body)).into_response()
}

/// The API router with CORS for `cors_origin` (`*` for any origin).
pub fn router(state: AppState, cors_origin: &str) -> Router {
    let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
    let cors = match HeaderValue::from_str(cors_origin) {
        Ok(origin) if cors_origin != "*" => cors.allow_origin(origin),
        _ => cors.allow_origin(Any),
    };
    Router::new()
        .route("/api/query", post(handle_query))
        .route("/api/feedback", post(handle_feedback))
        .route("/api/suggestions", get(handle_suggestions))
        .route("/api/stats", get(handle_stats))
        .route("/api/doc/{id}", get(handle_doc))
        .fallback(fallback)
        .layer(cors)
        .with_state(state)
}

/// Serves until Ctrl-C.
pub async fn serve(engine: Engine) -> std::io::Result<()> {
    let server = engine.config().server.clone();
    let autosave = engine.data_dir().is_some();
    let app = router(AppState::new(engine, autosave), &server.cors_origin);
    let listener = tokio::net::TcpListener::bind((server.host.as_str(), server.port)).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
