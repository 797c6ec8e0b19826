use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::api::{
    CreateSession, CurvesPayload, DatasetList, LabelSubmission, QueryPayload, SessionSummary,
};
use crate::error::{ServiceError, ServiceResult};
use crate::state::AppState;

type Shared = State<Arc<AppState>>;

/// Routes of the service.
pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/datasets", get(list_datasets))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", get(get_query))
        .route("/sessions/{id}/labels", post(post_labels))
        .route("/sessions/{id}/curves", get(get_curves))
        .with_state(state)
}

fn body<T>(payload: Result<Json<T>, JsonRejection>) -> ServiceResult<T> {
    payload
        .map(|Json(v)| v)
        .map_err(|e| ServiceError::BadRequest(e.body_text()))
}

/// Runs blocking work (training) off the async executor.
async fn blocking<T, F>(f: F) -> ServiceResult<T>
where
    F: FnOnce() -> ServiceResult<T> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Log(format!("worker failed: {e}")))?
}

async fn list_datasets(State(state): Shared) -> Json<DatasetList> {
    Json(state.datasets())
}

async fn create_session(
    State(state): Shared,
    payload: Result<Json<CreateSession>, JsonRejection>,
) -> ServiceResult<Json<SessionSummary>> {
    let request = body(payload)?;
    blocking(move || state.create(request)).await.map(Json)
}

async fn get_session(State(state): Shared, Path(id): Path<String>) -> ServiceResult<Json<SessionSummary>> {
    Ok(Json(state.session(&id)?.read().summary()))
}

async fn get_query(State(state): Shared, Path(id): Path<String>) -> ServiceResult<Json<QueryPayload>> {
    state.session(&id)?.read().query().map(Json)
}

async fn post_labels(
    State(state): Shared,
    Path(id): Path<String>,
    payload: Result<Json<LabelSubmission>, JsonRejection>,
) -> ServiceResult<Json<SessionSummary>> {
    let submission = body(payload)?;
    blocking(move || state.submit(&id, submission)).await.map(Json)
}

async fn get_curves(State(state): Shared, Path(id): Path<String>) -> ServiceResult<Json<CurvesPayload>> {
    Ok(Json(state.session(&id)?.read().curves()))
}
