//! HTTP+JSON routing over [`Service`].

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;
use tower_http::services::ServeDir;

use crate::error::ServiceError;
use crate::model::*;
use crate::service::Service;

const MAX_BODY: usize = 64 * 1024 * 1024;

struct ApiError(ServiceError);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        if status.is_server_error() {
            log::error!("{}", self.0);
        }
        (status, Json(serde_json::json!({ "error": self.0.body() }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

/// Runs a blocking service call off the async executor.
async fn blocking<T: Send + 'static>(
    svc: Arc<Service>,
    f: impl FnOnce(&Service) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || f(&svc))
        .await
        .map_err(|e| ApiError(ServiceError::Io(std::io::Error::other(e.to_string()))))?
        .map_err(ApiError)
}

fn parse_json<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(ServiceError::InvalidRequest(e.to_string())))
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    (status, Json(value)).into_response()
}

fn content_type(headers: &HeaderMap) -> String {
    headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or_default().to_string()
}

async fn vocabulary(State(svc): State<Arc<Service>>) -> Response {
    json(StatusCode::OK, &svc.vocabulary())
}

async fn create_project(State(svc): State<Arc<Service>>, body: Bytes) -> ApiResult {
    let req: CreateProject = parse_json(&body)?;
    let p = blocking(svc, move |s| s.create_project(&req.name)).await?;
    Ok(json(StatusCode::CREATED, &p))
}

async fn list_projects(State(svc): State<Arc<Service>>) -> ApiResult {
    let ids = blocking(svc, |s| s.list_projects()).await?;
    Ok(json(StatusCode::OK, &serde_json::json!({ "projects": ids })))
}

async fn get_project(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    let p = blocking(svc, move |s| s.get_project(&id)).await?;
    Ok(json(StatusCode::OK, &p))
}

async fn upload_image(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> ApiResult {
    let mime = content_type(&headers);
    let (image, created) = blocking(svc, move |s| s.upload_image(&id, &body, &mime)).await?;
    Ok(json(if created { StatusCode::CREATED } else { StatusCode::OK }, &image))
}

async fn get_image(State(svc): State<Arc<Service>>, Path((id, image)): Path<(String, String)>) -> ApiResult {
    let (bytes, media) = blocking(svc, move |s| s.image_bytes(&id, &image)).await?;
    Ok(([(header::CONTENT_TYPE, media.mime())], bytes).into_response())
}

async fn add_annotation(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: AnnotationRequest = parse_json(&body)?;
    let a = blocking(svc, move |s| s.add_annotation(&id, &req)).await?;
    Ok(json(StatusCode::CREATED, &a))
}

async fn suggest_links(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: SuggestRequest = parse_json(&body)?;
    let relations = blocking(svc, move |s| s.suggest_links(&id, &req)).await?;
    Ok(json(StatusCode::OK, &serde_json::json!({ "relations": relations })))
}

async fn add_link(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: LinkRequest = parse_json(&body)?;
    let link = blocking(svc, move |s| s.add_link(&id, &req)).await?;
    Ok(json(StatusCode::CREATED, &link))
}

async fn set_quality(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: QualityRequest = parse_json(&body)?;
    let q = blocking(svc, move |s| s.set_quality(&id, &req)).await?;
    Ok(json(StatusCode::CREATED, &q))
}

async fn status(State(svc): State<Arc<Service>>, Path(id): Path<String>) -> ApiResult {
    let st = blocking(svc, move |s| s.status(&id)).await?;
    Ok(json(StatusCode::OK, &st))
}

async fn run_query(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req: QueryRequest = parse_json(&body)?;
    let r = blocking(svc, move |s| s.run_query(&id, &req.query)).await?;
    Ok(json(StatusCode::OK, &r))
}

#[derive(Deserialize)]
struct ExportParams {
    format: Option<String>,
}

async fn export(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
    Query(params): Query<ExportParams>,
) -> ApiResult {
    match params.format.as_deref().unwrap_or("ttl") {
        "ttl" | "turtle" => {
            let ttl = blocking(svc, move |s| s.export_turtle(&id)).await?;
            Ok(([(header::CONTENT_TYPE, "text/turtle; charset=utf-8")], ttl).into_response())
        }
        "json" => {
            let ex = blocking(svc, move |s| s.export_json(&id)).await?;
            Ok(json(StatusCode::OK, &ex))
        }
        other => Err(ApiError(ServiceError::InvalidRequest(format!("unknown export format `{other}` (ttl or json)")))),
    }
}

async fn import(State(svc): State<Arc<Service>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let text = String::from_utf8(body.to_vec())
        .map_err(|_| ApiError(ServiceError::InvalidRequest("body is not UTF-8".into())))?;
    let summary = blocking(svc, move |s| s.import_turtle(&id, &text)).await?;
    Ok(json(StatusCode::OK, &summary))
}

async fn not_found(uri: axum::http::Uri) -> ApiError {
    ApiError(ServiceError::RouteNotFound(uri.path().to_string()))
}

/// The API router. Unmatched paths fall back to `static_dir` when given.
pub fn router(service: Arc<Service>, static_dir: Option<PathBuf>) -> Router {
    let api = Router::new()
        .route("/vocabulary", get(vocabulary))
        .route("/projects", post(create_project).get(list_projects))
        .route("/projects/{id}", get(get_project))
        .route("/projects/{id}/images", post(upload_image))
        .route("/projects/{id}/images/{image}", get(get_image))
        .route("/projects/{id}/annotations", post(add_annotation))
        .route("/projects/{id}/links:suggest", post(suggest_links))
        .route("/projects/{id}/links", post(add_link))
        .route("/projects/{id}/qualities", post(set_quality))
        .route("/projects/{id}/status", get(status))
        .route("/projects/{id}/query", post(run_query))
        .route("/projects/{id}/export", get(export))
        .route("/projects/{id}/import", post(import))
        .layer(DefaultBodyLimit::max(MAX_BODY))
        .with_state(service);
    match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api.fallback(not_found),
    }
}

/// Binds `addr` and serves in a background task. Returns the bound address.
pub async fn spawn(
    service: Arc<Service>,
    addr: SocketAddr,
    static_dir: Option<PathBuf>,
) -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(addr).await?;
    let bound = listener.local_addr()?;
    let app = router(service, static_dir);
    let handle = tokio::spawn(async move { axum::serve(listener, app).await });
    Ok((bound, handle))
}

/// Serves until the process is stopped.
pub async fn serve(service: Arc<Service>, addr: SocketAddr, static_dir: Option<PathBuf>) -> std::io::Result<()> {
    let listener = TcpListener::bind(addr).await?;
    log::info!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service, static_dir)).await
}
