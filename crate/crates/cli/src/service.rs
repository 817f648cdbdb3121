//! JSON-over-HTTP prediction service.
//!
//! `POST /api/v1/predict` takes repository text, `GET /api/v1/predict-repo`
//! fetches a repository remotely first, and `GET /healthz` reports whether
//! the model has finished loading. The model is immutable once loaded.

use std::path::PathBuf;
use std::sync::{Arc, OnceLock};

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use topicrec_core::classify::Recommendation;
use topicrec_core::corpus::RepoRecord;
use topicrec_core::pipeline::TrainedModel;

use crate::bundle::{load_model, ModelBundle};

pub const DEFAULT_N: usize = 5;

#[derive(Debug)]
pub struct LoadedModel {
    pub model: TrainedModel,
    pub version: String,
}

impl From<ModelBundle> for LoadedModel {
    fn from(b: ModelBundle) -> Self {
        LoadedModel {
            version: b.manifest.model_version,
            model: b.model,
        }
    }
}

/// Where `predict-repo` fetches repositories from; `None` disables it.
#[derive(Debug, Clone)]
pub struct RemoteSettings {
    pub api_base: String,
    pub token: Option<String>,
}

#[derive(Clone)]
pub struct AppState {
    model: Arc<OnceLock<LoadedModel>>,
    remote: Option<RemoteSettings>,
}

impl AppState {
    pub fn new(remote: Option<RemoteSettings>) -> Self {
        AppState {
            model: Arc::new(OnceLock::new()),
            remote,
        }
    }

    pub fn loaded(model: LoadedModel, remote: Option<RemoteSettings>) -> Self {
        let state = Self::new(remote);
        state.set_model(model);
        state
    }

    /// Installs the model; later calls are ignored.
    pub fn set_model(&self, model: LoadedModel) {
        let _ = self.model.set(model);
    }

    pub fn is_ready(&self) -> bool {
        self.model.get().is_some()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictRequest {
    pub name: Option<String>,
    pub description: Option<String>,
    pub readme: Option<String>,
    pub wiki: Option<String>,
    pub file_names: Option<Vec<String>>,
    pub n: Option<i64>,
}

impl PredictRequest {
    fn is_empty(&self) -> bool {
        let blank = |s: &Option<String>| s.as_deref().is_none_or(|s| s.trim().is_empty());
        blank(&self.name)
            && blank(&self.description)
            && blank(&self.readme)
            && blank(&self.wiki)
            && self
                .file_names
                .as_ref()
                .is_none_or(|f| f.iter().all(|p| p.trim().is_empty()))
    }

    fn into_record(self) -> RepoRecord {
        let mut rec = RepoRecord::new(format!("request/{}", self.name.unwrap_or_default()), 0);
        rec.description = self.description;
        rec.readme = self.readme;
        rec.wiki = self.wiki;
        rec.file_paths = self.file_names.unwrap_or_default();
        rec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictResponse {
    pub recommendations: Vec<Recommendation>,
    pub model_version: String,
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

fn model(state: &AppState) -> Result<&LoadedModel, ApiError> {
    state
        .model
        .get()
        .ok_or_else(|| ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "loading", "model is still loading"))
}

fn resolve_n(n: Option<i64>, m: usize) -> Result<usize, ApiError> {
    let n = n.unwrap_or(DEFAULT_N.min(m) as i64);
    if n < 1 || n as u64 > m as u64 {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_n",
            format!("n must be between 1 and {m}"),
        ));
    }
    Ok(n as usize)
}

fn predict_record(loaded: &LoadedModel, record: &RepoRecord, n: usize) -> Result<PredictResponse, ApiError> {
    let recommendations = loaded
        .model
        .recommend_record(record, n)
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    Ok(PredictResponse {
        recommendations,
        model_version: loaded.version.clone(),
    })
}

pub fn handle_predict(state: &AppState, body: &[u8]) -> Result<PredictResponse, ApiError> {
    let loaded = model(state)?;
    let req: PredictRequest =
        serde_json::from_slice(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_json", e.to_string()))?;
    if req.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty_input",
            "at least one of name, description, readme, wiki, file_names must be non-empty",
        ));
    }
    let n = resolve_n(req.n, loaded.model.n_topics())?;
    predict_record(loaded, &req.into_record(), n)
}

async fn predict(State(state): State<AppState>, body: Bytes) -> Result<Json<PredictResponse>, ApiError> {
    handle_predict(&state, &body).map(Json)
}

#[derive(Debug, Deserialize)]
struct RepoQuery {
    full_name: String,
    n: Option<i64>,
}

async fn predict_repo(
    State(state): State<AppState>,
    query: Result<Query<RepoQuery>, axum::extract::rejection::QueryRejection>,
) -> Result<Json<PredictResponse>, ApiError> {
    let Some(remote) = state.remote.clone() else {
        return Err(ApiError::new(
            StatusCode::NOT_IMPLEMENTED,
            "disabled",
            "remote repository fetching is disabled",
        ));
    };
    let Query(q) = query.map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "bad_query", e.body_text()))?;
    let loaded = model(&state)?;
    let n = resolve_n(q.n, loaded.model.n_topics())?;
    let record = fetch(remote, q.full_name).await?;
    predict_record(loaded, &record, n).map(Json)
}

#[cfg(feature = "remote")]
async fn fetch(remote: RemoteSettings, full_name: String) -> Result<RepoRecord, ApiError> {
    use topicrec_core::remote::{FetchError, RemoteClient};
    let result =
        tokio::task::spawn_blocking(move || RemoteClient::new(remote.api_base, remote.token).fetch_repo(&full_name))
            .await
            .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))?;
    result.map_err(|e| match e {
        FetchError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
        FetchError::BadName(_) => ApiError::new(StatusCode::BAD_REQUEST, "bad_name", e.to_string()),
        FetchError::UpstreamAuth { .. } | FetchError::UpstreamUnavailable(_) => {
            ApiError::new(StatusCode::BAD_GATEWAY, "upstream", e.to_string())
        }
    })
}

#[cfg(not(feature = "remote"))]
async fn fetch(_remote: RemoteSettings, _full_name: String) -> Result<RepoRecord, ApiError> {
    Err(ApiError::new(
        StatusCode::NOT_IMPLEMENTED,
        "disabled",
        "built without remote repository fetching",
    ))
}

async fn health(State(state): State<AppState>) -> Response {
    match state.model.get() {
        Some(m) => (
            StatusCode::OK,
            Json(json!({"status": "ok", "model_version": m.version})),
        )
            .into_response(),
        None => (StatusCode::SERVICE_UNAVAILABLE, Json(json!({"status": "loading"}))).into_response(),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/v1/predict", post(predict))
        .route("/api/v1/predict-repo", get(predict_repo))
        .route("/healthz", get(health))
        .with_state(state)
}

/// Binds `listen`, starts loading the bundle in the background and serves
/// until the process is stopped. Health checks answer 503 until loading
/// finishes.
pub async fn serve(listen: &str, model_dir: PathBuf, remote: Option<RemoteSettings>) -> std::io::Result<()> {
    let state = AppState::new(remote);
    let listener = tokio::net::TcpListener::bind(listen).await?;
    log::info!("listening on {}", listener.local_addr()?);
    let loader = state.clone();
    tokio::task::spawn_blocking(move || match load_model(&model_dir) {
        Ok(bundle) => {
            log::info!("model {} loaded", bundle.manifest.model_version);
            loader.set_model(bundle.into());
        }
        Err(e) => {
            log::error!("failed to load model from {}: {e}", model_dir.display());
            std::process::exit(3);
        }
    });
    axum::serve(listener, router(state)).await
}
