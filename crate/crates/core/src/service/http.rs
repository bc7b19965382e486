//! JSON-over-HTTP API.
//!
//! | method | path | |
//! |---|---|---|
//! | POST | `/projects/{p}/runs` | ingest a [`RunManifest`] |
//! | GET | `/projects/{p}/leaderboard` | ranked users |
//! | GET | `/projects/{p}/users/{u}/challenges` | open, completed, rejected |
//! | GET | `/projects/{p}/users/{u}/quests` | quests, later steps withheld |
//! | GET | `/projects/{p}/users/{u}/achievements` | unlocked, locked, secret count |
//! | POST | `/projects/{p}/users/{u}/challenges/{id}/reject` | `{reason, category?}` |
//! | POST | `/projects/{p}/users/{u}/unblock` | `{unit}` |
//! | PUT | `/projects/{p}/users/{u}/avatar` | `{avatar}` |
//! | POST | `/projects/{p}/users` | `{user_id, display_name}` |
//! | GET | `/projects/{p}/stats.csv` | statistics export |
//! | GET | `/ui/...` | static dashboard assets |
//!
//! Mutating requests must carry `x-project-token` when the project has a
//! token file.

use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::views::{user_achievements, user_challenges, user_quests, Envelope};
use super::{Engine, RunManifest, ServiceError};
use crate::model::RejectionCategory;
use crate::verify::{RejectError, UnblockError};

pub const TOKEN_HEADER: &str = "x-project-token";

#[derive(Clone)]
struct AppState {
    engine: Arc<Engine>,
    ui_dir: Option<PathBuf>,
}

pub enum ApiError {
    Service(ServiceError),
    Unauthorized,
    NotFound,
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError::Service(e)
    }
}

pub fn status_of(e: &ServiceError) -> StatusCode {
    match e {
        ServiceError::Parse(_) => StatusCode::UNPROCESSABLE_ENTITY,
        ServiceError::Stale { .. } | ServiceError::Reject(RejectError::AlreadyClosed(_)) => StatusCode::CONFLICT,
        ServiceError::UnknownProject(_)
        | ServiceError::UnknownUser(_)
        | ServiceError::Reject(RejectError::UnknownChallenge(_))
        | ServiceError::Unblock(UnblockError::NotBlocked(_)) => StatusCode::NOT_FOUND,
        ServiceError::Reject(RejectError::EmptyReason) | ServiceError::BadRequest(_) | ServiceError::Vcs(_) => {
            StatusCode::BAD_REQUEST
        }
        ServiceError::Store(_) => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        match self {
            ApiError::Service(e) => {
                let mut body = json!({ "error": e.to_string() });
                if let ServiceError::Parse(errors) = &e {
                    body["diagnostics"] =
                        errors.iter().map(|d| json!({ "file": d.file(), "message": d.to_string() })).collect();
                }
                (status_of(&e), Json(body)).into_response()
            }
            ApiError::Unauthorized => (StatusCode::UNAUTHORIZED, Json(json!({ "error": "missing or wrong project token" }))).into_response(),
            ApiError::NotFound => (StatusCode::NOT_FOUND, Json(json!({ "error": "not found" }))).into_response(),
        }
    }
}

type ApiResult<T> = Result<Json<Envelope<T>>, ApiError>;

fn envelope<T>(engine: &Engine, project: &str, data: T) -> Json<Envelope<T>> {
    let version = engine.snapshot(project).map_or(0, |s| s.project.version());
    Json(Envelope { version, data })
}

fn authorize(engine: &Engine, project: &str, headers: &HeaderMap) -> Result<(), ApiError> {
    match engine.token(project) {
        Some(expected) => {
            let given = headers.get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
            if given == Some(expected.as_str()) {
                Ok(())
            } else {
                Err(ApiError::Unauthorized)
            }
        }
        None => Ok(()),
    }
}

pub fn router(engine: Arc<Engine>, ui_dir: Option<PathBuf>) -> Router {
    Router::new()
        .route("/projects/{p}/runs", post(ingest_run))
        .route("/projects/{p}/leaderboard", get(get_leaderboard))
        .route("/projects/{p}/stats.csv", get(get_stats))
        .route("/projects/{p}/users", post(register_user))
        .route("/projects/{p}/users/{u}/challenges", get(get_challenges))
        .route("/projects/{p}/users/{u}/quests", get(get_quests))
        .route("/projects/{p}/users/{u}/achievements", get(get_achievements))
        .route("/projects/{p}/users/{u}/challenges/{id}/reject", post(reject_challenge))
        .route("/projects/{p}/users/{u}/unblock", post(unblock_unit))
        .route("/projects/{p}/users/{u}/avatar", put(set_avatar))
        .route("/ui", get(ui_index))
        .route("/ui/", get(ui_index))
        .route("/ui/{*path}", get(ui_file))
        .with_state(AppState { engine, ui_dir })
}

async fn ingest_run(
    State(s): State<AppState>,
    UrlPath(p): UrlPath<String>,
    headers: HeaderMap,
    Json(manifest): Json<RunManifest>,
) -> ApiResult<super::RunReport> {
    authorize(&s.engine, &p, &headers)?;
    let engine = s.engine.clone();
    let project = p.clone();
    let report = tokio::task::spawn_blocking(move || engine.ingest_manifest(&project, &manifest))
        .await
        .map_err(|e| ServiceError::BadRequest(format!("run processing aborted: {e}")))??;
    Ok(envelope(&s.engine, &p, report))
}

async fn get_leaderboard(State(s): State<AppState>, UrlPath(p): UrlPath<String>) -> ApiResult<Vec<crate::scoring::LeaderboardEntry>> {
    let rows = s.engine.leaderboard(&p)?;
    Ok(envelope(&s.engine, &p, rows))
}

async fn get_stats(State(s): State<AppState>, UrlPath(p): UrlPath<String>) -> Result<Response, ApiError> {
    let csv = s.engine.stats_csv(&p)?;
    Ok(([(header::CONTENT_TYPE, "text/csv; charset=utf-8")], csv).into_response())
}

async fn get_challenges(State(s): State<AppState>, UrlPath((p, u)): UrlPath<(String, String)>) -> ApiResult<super::views::UserChallenges> {
    let user = s.engine.user(&p, &u)?;
    Ok(envelope(&s.engine, &p, user_challenges(&user)))
}

async fn get_quests(State(s): State<AppState>, UrlPath((p, u)): UrlPath<(String, String)>) -> ApiResult<super::views::UserQuests> {
    let user = s.engine.user(&p, &u)?;
    Ok(envelope(&s.engine, &p, user_quests(&user)))
}

async fn get_achievements(
    State(s): State<AppState>,
    UrlPath((p, u)): UrlPath<(String, String)>,
) -> ApiResult<super::views::UserAchievements> {
    let user = s.engine.user(&p, &u)?;
    Ok(envelope(&s.engine, &p, user_achievements(&user, s.engine.catalog())))
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RejectBody {
    #[serde(default)]
    pub reason: String,
    #[serde(default)]
    pub category: Option<RejectionCategory>,
}

async fn reject_challenge(
    State(s): State<AppState>,
    UrlPath((p, u, id)): UrlPath<(String, String, String)>,
    headers: HeaderMap,
    Json(body): Json<RejectBody>,
) -> ApiResult<super::views::ChallengeView> {
    authorize(&s.engine, &p, &headers)?;
    let ch = s.engine.reject(&p, &u, &id, &body.reason, body.category)?;
    Ok(envelope(&s.engine, &p, super::views::ChallengeView::of(&ch)))
}

#[derive(Debug, Deserialize, Serialize)]
pub struct UnblockBody {
    pub unit: String,
}

async fn unblock_unit(
    State(s): State<AppState>,
    UrlPath((p, u)): UrlPath<(String, String)>,
    headers: HeaderMap,
    Json(body): Json<UnblockBody>,
) -> ApiResult<super::views::UserChallenges> {
    authorize(&s.engine, &p, &headers)?;
    s.engine.unblock(&p, &u, &body.unit)?;
    let user = s.engine.user(&p, &u)?;
    Ok(envelope(&s.engine, &p, user_challenges(&user)))
}

#[derive(Debug, Deserialize, Serialize)]
pub struct AvatarBody {
    pub avatar: u32,
}

async fn set_avatar(
    State(s): State<AppState>,
    UrlPath((p, u)): UrlPath<(String, String)>,
    headers: HeaderMap,
    Json(body): Json<AvatarBody>,
) -> ApiResult<AvatarBody> {
    authorize(&s.engine, &p, &headers)?;
    s.engine.set_avatar(&p, &u, body.avatar)?;
    Ok(envelope(&s.engine, &p, body))
}

#[derive(Debug, Deserialize, Serialize)]
pub struct RegisterBody {
    pub user_id: String,
    #[serde(default)]
    pub display_name: Option<String>,
}

async fn register_user(
    State(s): State<AppState>,
    UrlPath(p): UrlPath<String>,
    headers: HeaderMap,
    Json(body): Json<RegisterBody>,
) -> ApiResult<RegisterBody> {
    authorize(&s.engine, &p, &headers)?;
    let name = body.display_name.clone().unwrap_or_else(|| body.user_id.clone());
    s.engine.register_user(&p, &body.user_id, &name)?;
    Ok(envelope(&s.engine, &p, body))
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") | Some("mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("ico") => "image/x-icon",
        Some("woff2") => "font/woff2",
        _ => "application/octet-stream",
    }
}

/// Dashboard assets compiled in, served when no asset directory is given.
const BUILTIN_UI: [(&str, &[u8]); 3] = [
    ("index.html", include_bytes!("../../ui/index.html")),
    ("app.js", include_bytes!("../../ui/app.js")),
    ("style.css", include_bytes!("../../ui/style.css")),
];

async fn serve_static(ui_dir: Option<PathBuf>, rel: &str) -> Result<Response, ApiError> {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return Err(ApiError::NotFound);
    }
    let Some(dir) = ui_dir else {
        let (_, bytes) = BUILTIN_UI.iter().find(|(name, _)| Path::new(name) == rel).ok_or(ApiError::NotFound)?;
        return Ok(([(header::CONTENT_TYPE, content_type(rel))], *bytes).into_response());
    };
    let path = dir.join(rel);
    let bytes = tokio::fs::read(&path).await.map_err(|_| ApiError::NotFound)?;
    Ok(([(header::CONTENT_TYPE, content_type(&path))], bytes).into_response())
}

async fn ui_index(State(s): State<AppState>) -> Result<Response, ApiError> {
    serve_static(s.ui_dir.clone(), "index.html").await
}

async fn ui_file(State(s): State<AppState>, UrlPath(path): UrlPath<String>) -> Result<Response, ApiError> {
    let rel = if path.is_empty() || path.ends_with('/') { format!("{path}index.html") } else { path };
    serve_static(s.ui_dir.clone(), &rel).await
}

/// Binds and serves until the process is stopped.
pub async fn serve(engine: Arc<Engine>, port: u16, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(engine, ui_dir)).await
}
