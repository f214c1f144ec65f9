//! HTTP JSON API over a [`RunManager`]. Handlers only read snapshots or
//! flip the stop flag, so none of them waits on a sampler.

use std::collections::HashMap;
use std::sync::Arc;

use algoforge::search::Method;
use algoforge::tasks::registry;
use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;

use crate::config::RunConfig;
use crate::manager::{ApiError, BestView, RunHandle, RunManager};

#[derive(Serialize)]
struct ErrorBody {
    code: &'static str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<String>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self {
            ApiError::InvalidConfig(_) => (StatusCode::BAD_REQUEST, "invalid_config"),
            ApiError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ApiError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ApiError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ApiError::TooManyRuns { .. } => (StatusCode::TOO_MANY_REQUESTS, "too_many_runs"),
            ApiError::Internal(_) => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        let (message, field) = match self {
            ApiError::InvalidConfig(e) => (e.message, e.field),
            other => (other.to_string(), None),
        };
        (status, Json(ErrorBody { code, message, field })).into_response()
    }
}

#[derive(Serialize)]
struct MethodInfo {
    name: &'static str,
    title: &'static str,
    objectives: usize,
}

pub fn router(manager: Arc<RunManager>) -> Router {
    Router::new()
        .route("/runs", post(create_run).get(list_runs))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/stop", post(stop_run))
        .route("/runs/{id}/events", get(get_events))
        .route("/runs/{id}/best", get(get_best))
        .route("/tasks", get(list_tasks))
        .route("/methods", get(list_methods))
        .fallback(|| async { ApiError::NotFound("no such endpoint".into()) })
        .with_state(manager)
}

async fn create_run(
    State(manager): State<Arc<RunManager>>,
    body: Bytes,
) -> Result<(StatusCode, Json<RunHandle>), ApiError> {
    let config = RunConfig::from_json(&body)?;
    // resolving may read script files and build an HTTP client
    let handle = tokio::task::spawn_blocking(move || manager.start(config))
        .await
        .map_err(|e| ApiError::Internal(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(handle)))
}

async fn list_runs(State(manager): State<Arc<RunManager>>) -> Json<Vec<RunHandle>> {
    Json(manager.list())
}

async fn get_run(State(manager): State<Arc<RunManager>>, Path(id): Path<String>) -> Result<Json<RunHandle>, ApiError> {
    manager.get(&id).map(Json)
}

async fn stop_run(State(manager): State<Arc<RunManager>>, Path(id): Path<String>) -> Result<Json<RunHandle>, ApiError> {
    manager.stop(&id).map(Json)
}

async fn get_events(
    State(manager): State<Arc<RunManager>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    let since = match query.get("since") {
        None => -1,
        Some(s) => s
            .parse::<i64>()
            .map_err(|_| ApiError::BadRequest(format!("`since` must be an integer, got `{s}`")))?,
    };
    Ok(Json(manager.events(&id, since)?).into_response())
}

async fn get_best(State(manager): State<Arc<RunManager>>, Path(id): Path<String>) -> Result<Json<BestView>, ApiError> {
    manager.best(&id).map(Json)
}

async fn list_tasks() -> Response {
    Json(registry()).into_response()
}

async fn list_methods() -> Json<Vec<MethodInfo>> {
    Json(
        Method::ALL
            .iter()
            .map(|m| MethodInfo {
                name: m.as_str(),
                title: m.title(),
                objectives: m.objective_count(),
            })
            .collect(),
    )
}

/// Serves until ctrl-c, then stops every active run.
pub async fn serve(listener: tokio::net::TcpListener, manager: Arc<RunManager>) -> std::io::Result<()> {
    let app = router(manager.clone());
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    manager.stop_all();
    Ok(())
}
