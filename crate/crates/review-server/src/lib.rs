//! HTTP front end of the review store.
//!
//! Every computed number (progress, kappa, metrics, stripe tables) comes from
//! the core session; the service only routes, validates and serializes.

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, Request, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use soliclone_core::review::{
    agreement_markdown, labels_markdown, metrics_markdown, stripes_markdown, Ack, Judgment,
    NewSession, Resolution, ReviewError, ReviewStore,
};
use soliclone_core::Error as CoreError;

pub struct AppState {
    pub store: ReviewStore,
    /// Static bearer token; `None` leaves the API open.
    pub token: Option<String>,
}

impl AppState {
    pub fn new(store: ReviewStore) -> Self {
        AppState { store, token: None }
    }

    pub fn with_token(mut self, token: Option<String>) -> Self {
        self.token = token;
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ErrorBody {
    pub error: String,
    pub kind: String,
}

pub struct ApiError {
    status: StatusCode,
    body: ErrorBody,
}

impl ApiError {
    fn new(status: StatusCode, kind: &str, error: impl Into<String>) -> Self {
        ApiError {
            status,
            body: ErrorBody {
                error: error.into(),
                kind: kind.into(),
            },
        }
    }
}

fn review_status(e: &ReviewError) -> (StatusCode, &'static str) {
    use ReviewError::*;
    match e {
        UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
        DuplicateSession(_) => (StatusCode::CONFLICT, "duplicate_session"),
        SessionClosed(_) => (StatusCode::CONFLICT, "session_closed"),
        NotInConflict(_) => (StatusCode::CONFLICT, "not_in_conflict"),
        UnresolvedConflicts(_) => (StatusCode::CONFLICT, "unresolved_conflicts"),
        IncompleteJudging(_) => (StatusCode::CONFLICT, "incomplete_judging"),
        TooFewCommonPairs(_) => (StatusCode::CONFLICT, "too_few_common_pairs"),
        UndefinedKappa(_) => (StatusCode::CONFLICT, "undefined_kappa"),
        NeedTwoRaters(_) => (StatusCode::CONFLICT, "need_two_raters"),
        EmptyCandidateSet => (StatusCode::CONFLICT, "empty_candidate_set"),
        InvalidSessionName(_) => (StatusCode::BAD_REQUEST, "invalid_session_name"),
        EmptySample => (StatusCode::BAD_REQUEST, "empty_sample"),
        DuplicatePair(_) => (StatusCode::BAD_REQUEST, "duplicate_pair"),
        NoRaters => (StatusCode::BAD_REQUEST, "no_raters"),
        UnknownPair(_) => (StatusCode::BAD_REQUEST, "unknown_pair"),
        UnknownRater(_) => (StatusCode::BAD_REQUEST, "unknown_rater"),
        LabelsWithoutClone => (StatusCode::BAD_REQUEST, "labels_without_clone"),
    }
}

impl From<ReviewError> for ApiError {
    fn from(e: ReviewError) -> Self {
        let (status, kind) = review_status(&e);
        ApiError::new(status, kind, e.to_string())
    }
}

impl From<CoreError> for ApiError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Review(r) => r.into(),
            CoreError::InvalidArgument(m) | CoreError::Contract(m) => {
                ApiError::new(StatusCode::BAD_REQUEST, "invalid", m)
            }
            other => {
                log::error!("review store failure: {other}");
                ApiError::new(
                    StatusCode::INTERNAL_SERVER_ERROR,
                    "internal",
                    other.to_string(),
                )
            }
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), "bad_body", e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;
type Shared = State<Arc<AppState>>;

#[derive(Debug, Deserialize)]
pub struct FormatQuery {
    format: Option<String>,
}

impl FormatQuery {
    fn markdown(&self) -> ApiResult<bool> {
        match self.format.as_deref() {
            None | Some("json") => Ok(false),
            Some("markdown") | Some("md") => Ok(true),
            Some(other) => Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "bad_format",
                format!("unknown format `{other}`"),
            )),
        }
    }
}

fn markdown(text: String) -> Response {
    (
        [(header::CONTENT_TYPE, "text/markdown; charset=utf-8")],
        text,
    )
        .into_response()
}

fn ack_response(ack: Ack) -> Response {
    let status = match ack {
        Ack::Stored => StatusCode::CREATED,
        Ack::Overwritten => StatusCode::OK,
    };
    (status, Json(serde_json::json!({ "ack": ack }))).into_response()
}

async fn list_sessions(State(app): Shared) -> Json<Vec<String>> {
    Json(app.store.session_ids())
}

async fn create_session(
    State(app): Shared,
    body: Result<Json<NewSession>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(spec) = body?;
    let id = app.store.create_session(spec)?;
    let status = app.store.with_session(&id, |s| s.status())?;
    Ok((StatusCode::CREATED, Json(status)).into_response())
}

async fn session_status(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(app.store.with_session(&id, |s| s.status())?).into_response())
}

#[derive(Debug, Deserialize)]
pub struct RaterQuery {
    rater: Option<String>,
}

async fn next_pair(
    State(app): Shared,
    Path(id): Path<String>,
    Query(q): Query<RaterQuery>,
) -> ApiResult<Response> {
    let rater = q.rater.ok_or_else(|| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "missing_rater",
            "query parameter `rater` is required",
        )
    })?;
    match app.store.with_session(&id, |s| s.next(&rater))?? {
        Some(next) => Ok(Json(next).into_response()),
        None => Ok(StatusCode::NO_CONTENT.into_response()),
    }
}

async fn submit_judgment(
    State(app): Shared,
    Path(id): Path<String>,
    body: Result<Json<Judgment>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(j) = body?;
    Ok(ack_response(app.store.submit(&id, j)?))
}

async fn list_judgments(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let js: Vec<Judgment> = app
        .store
        .with_session(&id, |s| s.judgments().cloned().collect())?;
    Ok(Json(js).into_response())
}

async fn agreement(
    State(app): Shared,
    Path(id): Path<String>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let md = q.markdown()?;
    let report = app.store.with_session(&id, |s| s.agreement())??;
    Ok(if md {
        markdown(agreement_markdown(&report))
    } else {
        Json(report).into_response()
    })
}

async fn conflicts(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    Ok(Json(app.store.with_session(&id, |s| s.conflicts())?).into_response())
}

async fn resolve(
    State(app): Shared,
    Path(id): Path<String>,
    body: Result<Json<Resolution>, JsonRejection>,
) -> ApiResult<Response> {
    let Json(r) = body?;
    Ok(ack_response(app.store.resolve(&id, r)?))
}

async fn final_verdicts(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    let finals = app.store.with_session(&id, |s| s.final_verdicts())??;
    // PairId keys serialize as "a|b" strings
    let map: serde_json::Map<String, serde_json::Value> = finals
        .into_iter()
        .map(|(k, v)| (k.to_string(), serde_json::to_value(v).expect("plain data")))
        .collect();
    Ok(Json(map).into_response())
}

async fn close(State(app): Shared, Path(id): Path<String>) -> ApiResult<Response> {
    app.store.close(&id)?;
    Ok(Json(app.store.with_session(&id, |s| s.status())?).into_response())
}

async fn report(
    State(app): Shared,
    Path((id, kind)): Path<(String, String)>,
    Query(q): Query<FormatQuery>,
) -> ApiResult<Response> {
    let md = q.markdown()?;
    let resp = match kind.as_str() {
        "stripes" => {
            let r = app.store.with_session(&id, |s| s.stripe_reports())??;
            if md {
                markdown(stripes_markdown(&r))
            } else {
                Json(r).into_response()
            }
        }
        "metrics" => {
            let r = app.store.with_session(&id, |s| s.metrics())??;
            if md {
                markdown(metrics_markdown(&r))
            } else {
                Json(r).into_response()
            }
        }
        "labels" => {
            let r = app.store.with_session(&id, |s| s.label_report())??;
            if md {
                markdown(labels_markdown(&r))
            } else {
                Json(r).into_response()
            }
        }
        other => {
            return Err(ApiError::new(
                StatusCode::NOT_FOUND,
                "unknown_report",
                format!("unknown report `{other}`; expected stripes, metrics or labels"),
            ))
        }
    };
    Ok(resp)
}

async fn require_token(
    State(app): Shared,
    headers: HeaderMap,
    req: Request,
    next: Next,
) -> Response {
    if let Some(token) = &app.token {
        let presented = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        if presented != Some(token.as_str()) {
            return ApiError::new(
                StatusCode::UNAUTHORIZED,
                "unauthorized",
                "missing or wrong bearer token",
            )
            .into_response();
        }
    }
    next.run(req).await
}

/// The JSON API, mounted at the root.
pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(session_status))
        .route("/sessions/{id}/next", get(next_pair))
        .route(
            "/sessions/{id}/judgments",
            get(list_judgments).post(submit_judgment),
        )
        .route("/sessions/{id}/agreement", get(agreement))
        .route("/sessions/{id}/conflicts", get(conflicts))
        .route("/sessions/{id}/resolutions", post(resolve))
        .route("/sessions/{id}/verdicts", get(final_verdicts))
        .route("/sessions/{id}/close", post(close))
        .route("/sessions/{id}/reports/{kind}", get(report))
        .route_layer(middleware::from_fn_with_state(app.clone(), require_token))
        .with_state(app)
}

/// The API plus, when given, a static directory (the built review UI) as fallback.
pub fn app(state: Arc<AppState>, static_dir: Option<PathBuf>) -> Router {
    let api = router(state);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    }
}

pub async fn serve(
    addr: SocketAddr,
    state: Arc<AppState>,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review service listening on {}", listener.local_addr()?);
    axum::serve(listener, app(state, static_dir)).await
}
