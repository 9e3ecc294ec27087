use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::rejection::{BytesRejection, JsonRejection};
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::Semaphore;

use scriptrate_core::analyzer::{AnalyzerKind, SceneVerdict};
use scriptrate_core::{Category, Rating};

use crate::error::ServiceError;
use crate::service::{ChatVerdict, Progress, Service};
use crate::store::AuditEntry;

#[derive(Clone)]
pub struct AppState {
    service: Arc<Service>,
    uploads: Arc<Semaphore>,
}

impl AppState {
    pub fn new(service: Arc<Service>) -> Self {
        let permits = service.config().max_concurrent_uploads.max(1);
        AppState {
            service,
            uploads: Arc::new(Semaphore::new(permits)),
        }
    }

    pub fn service(&self) -> &Arc<Service> {
        &self.service
    }
}

pub fn router(service: Arc<Service>) -> Router {
    let limit = service.config().max_upload_bytes;
    Router::new()
        .route("/chat", post(chat))
        .route("/upload", post(upload).layer(DefaultBodyLimit::max(limit)))
        .route("/report/{file_id}", get(report))
        .route("/report/{file_id}/audit", get(audit))
        .route("/report/{file_id}/save", post(save))
        .route("/report/{file_id}/scene/{index}/reanalyze", post(reanalyze))
        .route("/report/{file_id}/scene/{index}/override", post(override_verdict))
        .route("/progress/{file_id}", get(progress))
        .with_state(AppState::new(service))
}

async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(format!("worker task failed: {e}")))?
}

fn json_body(body: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn json_rejection(r: JsonRejection) -> ServiceError {
    ServiceError::BadRequest(r.body_text())
}

fn parse_kind(s: Option<&str>) -> Result<AnalyzerKind, ServiceError> {
    match s {
        None | Some("") => Ok(AnalyzerKind::Rules),
        Some(s) => Ok(s.parse()?),
    }
}

#[derive(Debug, Deserialize)]
pub struct ChatRequest {
    pub text: String,
    #[serde(default)]
    pub analyzer: Option<String>,
}

async fn chat(
    State(state): State<AppState>,
    body: Result<Json<ChatRequest>, JsonRejection>,
) -> Result<Json<ChatVerdict>, ServiceError> {
    let Json(req) = body.map_err(json_rejection)?;
    let kind = parse_kind(req.analyzer.as_deref())?;
    let service = state.service.clone();
    Ok(Json(blocking(move || service.handle_chat(&req.text, kind)).await?))
}

#[derive(Debug, Default, Deserialize)]
pub struct UploadParams {
    #[serde(default)]
    pub filename: Option<String>,
    #[serde(default)]
    pub analyzer: Option<String>,
    /// Return 202 with the file id at once and analyze in the background.
    #[serde(default, rename = "async")]
    pub background: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Accepted {
    pub file_id: String,
}

async fn upload(
    State(state): State<AppState>,
    Query(params): Query<UploadParams>,
    body: Result<Bytes, BytesRejection>,
) -> Result<Response, ServiceError> {
    let bytes = body.map_err(|r| match r.status() {
        StatusCode::PAYLOAD_TOO_LARGE => ServiceError::PayloadTooLarge(format!(
            "upload exceeds the {} byte limit",
            state.service.config().max_upload_bytes
        )),
        _ => ServiceError::BadRequest(r.body_text()),
    })?;
    let kind = parse_kind(params.analyzer.as_deref())?;
    let filename = params.filename.unwrap_or_else(|| "upload.txt".to_string());
    let service = state.service.clone();
    let file_id = service.begin_upload();

    let work = {
        let file_id = file_id.clone();
        let uploads = state.uploads.clone();
        async move {
            let _permit = uploads
                .acquire_owned()
                .await
                .map_err(|e| ServiceError::Internal(e.to_string()))?;
            blocking(move || service.run_upload(&file_id, &filename, bytes.to_vec(), kind)).await
        }
    };
    if params.background {
        tokio::spawn(work);
        return Ok((StatusCode::ACCEPTED, Json(Accepted { file_id })).into_response());
    }
    Ok(json_body(work.await?))
}

async fn report(State(state): State<AppState>, Path(file_id): Path<String>) -> Result<Response, ServiceError> {
    Ok(json_body(state.service.report(&file_id)?))
}

async fn progress(State(state): State<AppState>, Path(file_id): Path<String>) -> Result<Json<Progress>, ServiceError> {
    Ok(Json(state.service.progress(&file_id)?))
}

async fn audit(
    State(state): State<AppState>,
    Path(file_id): Path<String>,
) -> Result<Json<Vec<AuditEntry>>, ServiceError> {
    Ok(Json(state.service.audit(&file_id)?))
}

async fn save(State(state): State<AppState>, Path(file_id): Path<String>) -> Result<StatusCode, ServiceError> {
    state.service.save(&file_id)?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Default, Deserialize)]
pub struct ReanalyzeRequest {
    #[serde(default)]
    pub edited_text: Option<String>,
    #[serde(default)]
    pub clear_override: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ReanalyzeResponse {
    pub verdict: SceneVerdict,
    pub report: serde_json::Value,
}

async fn reanalyze(
    State(state): State<AppState>,
    Path((file_id, index)): Path<(String, usize)>,
    body: Result<Json<ReanalyzeRequest>, JsonRejection>,
) -> Result<Json<ReanalyzeResponse>, ServiceError> {
    let req = match body {
        Ok(Json(req)) => req,
        Err(JsonRejection::MissingJsonContentType(_)) => ReanalyzeRequest::default(),
        Err(e) => return Err(json_rejection(e)),
    };
    let service = state.service.clone();
    let (verdict, report) = blocking(move || {
        service.reanalyze_scene(&file_id, index, req.edited_text.as_deref(), req.clear_override)
    })
    .await?;
    let report = serde_json::from_str(&report).map_err(|e| ServiceError::Internal(e.to_string()))?;
    Ok(Json(ReanalyzeResponse { verdict, report }))
}

#[derive(Debug, Deserialize)]
pub struct OverrideRequest {
    pub rating: Rating,
    #[serde(default)]
    pub label: Option<Category>,
    #[serde(default)]
    pub note: String,
}

async fn override_verdict(
    State(state): State<AppState>,
    Path((file_id, index)): Path<(String, usize)>,
    body: Result<Json<OverrideRequest>, JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(req) = body.map_err(json_rejection)?;
    let report = state
        .service
        .override_verdict(&file_id, index, req.rating, req.label, &req.note)?;
    Ok(json_body(report))
}
