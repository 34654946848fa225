//! HTTP routes.

use std::sync::Arc;

use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{FromRequest, FromRequestParts, Path, Request, State};
use axum::http::request::Parts;
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;

use crate::error::ApiError;
use crate::model::{
    Candidate, CandidateQuery, CreateSession, Created, DatasetInfo, LabelRequest, LabelResponse,
    Metrics, SessionView,
};
use crate::session::DEFAULT_TOP_K;
use crate::state::AppState;

type Shared = State<Arc<AppState>>;

/// `Json` whose rejections use the service error body.
pub struct ApiJson<T>(pub T);

impl<S, T> FromRequest<S> for ApiJson<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request(req: Request, state: &S) -> Result<Self, ApiError> {
        match Json::<T>::from_request(req, state).await {
            Ok(Json(v)) => Ok(ApiJson(v)),
            Err(r) => Err(json_rejection(r)),
        }
    }
}

fn json_rejection(r: JsonRejection) -> ApiError {
    let status = r.status();
    let code = if status == StatusCode::UNPROCESSABLE_ENTITY { "validation" } else { "bad_request" };
    ApiError::new(status, code, r.body_text())
}

pub struct ApiQuery<T>(pub T);

impl<S, T> FromRequestParts<S> for ApiQuery<T>
where
    T: DeserializeOwned,
    S: Send + Sync,
{
    type Rejection = ApiError;

    async fn from_request_parts(parts: &mut Parts, state: &S) -> Result<Self, ApiError> {
        axum::extract::Query::<T>::from_request_parts(parts, state)
            .await
            .map(|q| ApiQuery(q.0))
            .map_err(|r: QueryRejection| ApiError::new(r.status(), "bad_request", r.body_text()))
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/datasets", get(list_datasets))
        .route("/sessions", get(list_sessions).post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/candidate", get(get_candidate))
        .route("/sessions/{id}/labels", post(submit_label))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .with_state(state)
}

async fn list_datasets(State(st): Shared) -> Json<Vec<DatasetInfo>> {
    Json(st.datasets())
}

async fn list_sessions(State(st): Shared) -> Json<Vec<String>> {
    Json(st.session_ids())
}

async fn create_session(
    State(st): Shared,
    ApiJson(req): ApiJson<CreateSession>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let created = st.create(&req)?;
    let status = if created.created { StatusCode::CREATED } else { StatusCode::OK };
    Ok((status, Json(created)))
}

async fn get_session(State(st): Shared, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    Ok(Json(st.session(&id)?.lock().view()))
}

async fn get_candidate(
    State(st): Shared,
    Path(id): Path<String>,
    ApiQuery(q): ApiQuery<CandidateQuery>,
) -> Result<Json<Candidate>, ApiError> {
    let k = q.k.unwrap_or(DEFAULT_TOP_K);
    Ok(Json(st.session(&id)?.lock().candidate(k)?))
}

async fn submit_label(
    State(st): Shared,
    Path(id): Path<String>,
    ApiJson(req): ApiJson<LabelRequest>,
) -> Result<Json<LabelResponse>, ApiError> {
    Ok(Json(st.label(&id, &req)?))
}

async fn get_metrics(State(st): Shared, Path(id): Path<String>) -> Result<Json<Metrics>, ApiError> {
    Ok(Json(st.session(&id)?.lock().metrics()))
}
