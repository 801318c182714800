//! HTTP + JSON front end.
//!
//! | method | path                          | success |
//! |--------|-------------------------------|---------|
//! | GET    | `/v1/campaigns`               | 200 / 304 |
//! | GET    | `/v1/campaigns/{id}`          | 200 |
//! | POST   | `/v1/campaigns`               | 201 |
//! | PUT    | `/v1/campaigns/{id}`          | 200 (reviewer token) |
//! | POST   | `/v1/campaigns/{id}/review`   | 200 (reviewer token) |
//! | GET    | `/v1/campaigns/{id}/stats`    | 200 |
//! | POST   | `/v1/metrics`                 | 200 |
//!
//! Errors carry `{"error": CODE, "message": ...}`; schema problems are 400,
//! missing or bad credentials 401, unknown or unapproved campaigns 404, and
//! duplicate ids, illegal transitions and inconsistent checklists 409.

use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use boycott_core::MetricsBatch;
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::service::{Registry, RegistryError, ReviewDecision};

impl IntoResponse for RegistryError {
    fn into_response(self) -> Response {
        let status = match &self {
            RegistryError::ValidationFailed(_) | RegistryError::SchemaError(_) => StatusCode::BAD_REQUEST,
            RegistryError::Unauthorized => StatusCode::UNAUTHORIZED,
            RegistryError::UnknownCampaign(_) => StatusCode::NOT_FOUND,
            RegistryError::DuplicateId(_)
            | RegistryError::InvalidTransition(_)
            | RegistryError::ChecklistInconsistent(_) => StatusCode::CONFLICT,
            RegistryError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let mut body = json!({ "error": self.code(), "message": self.to_string() });
        if let RegistryError::ValidationFailed(report) = &self {
            body["report"] = serde_json::to_value(report).expect("report serializes");
        }
        if status == StatusCode::UNAUTHORIZED {
            return (status, [(header::WWW_AUTHENTICATE, "Bearer")], Json(body)).into_response();
        }
        (status, Json(body)).into_response()
    }
}

type Shared = Arc<Registry>;

fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, RegistryError> {
    serde_json::from_slice(body).map_err(|e| RegistryError::SchemaError(e.to_string()))
}

fn bearer(headers: &HeaderMap) -> Option<&str> {
    headers
        .get(header::AUTHORIZATION)?
        .to_str()
        .ok()?
        .strip_prefix("Bearer ")
        .map(str::trim)
}

fn etag(version: u64) -> String {
    format!("\"v{version}\"")
}

async fn list_campaigns(State(reg): State<Shared>, headers: HeaderMap) -> Response {
    let (version, campaigns) = reg.list_active_campaigns();
    let tag = etag(version);
    let fresh = headers
        .get(header::IF_NONE_MATCH)
        .and_then(|v| v.to_str().ok())
        .is_some_and(|v| v.split(',').any(|t| t.trim() == tag));
    if fresh {
        return (StatusCode::NOT_MODIFIED, [(header::ETAG, tag)]).into_response();
    }
    (StatusCode::OK, [(header::ETAG, tag)], Json(json!({ "version": version, "campaigns": campaigns })))
        .into_response()
}

async fn get_campaign(State(reg): State<Shared>, Path(id): Path<String>) -> Result<Response, RegistryError> {
    Ok(Json(reg.active_campaign(&id)?).into_response())
}

async fn submit(State(reg): State<Shared>, body: Bytes) -> Result<Response, RegistryError> {
    let doc: Value = parse_body(&body)?;
    let id = reg.submit_campaign(&doc)?;
    Ok((StatusCode::CREATED, Json(json!({ "campaign_id": id, "review_status": "submitted" }))).into_response())
}

async fn update(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, RegistryError> {
    let token = bearer(&headers);
    if token.and_then(|t| reg.config().reviewer_for(t)).is_none() {
        return Err(RegistryError::Unauthorized);
    }
    let doc: Value = parse_body(&body)?;
    let version = reg.update_campaign(&id, &doc, token)?;
    Ok(Json(json!({ "campaign_id": id, "version": version })).into_response())
}

async fn review(
    State(reg): State<Shared>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, RegistryError> {
    let token = bearer(&headers);
    if token.and_then(|t| reg.config().reviewer_for(t)).is_none() {
        return Err(RegistryError::Unauthorized);
    }
    let decision: ReviewDecision = parse_body(&body)?;
    let status = reg.review_campaign(&id, &decision, token)?;
    Ok(Json(json!({ "campaign_id": id, "review_status": status })).into_response())
}

async fn stats(State(reg): State<Shared>, Path(id): Path<String>) -> Result<Response, RegistryError> {
    Ok(Json(reg.get_stats(&id)?).into_response())
}

async fn metrics(State(reg): State<Shared>, body: Bytes) -> Result<Response, RegistryError> {
    let batch: MetricsBatch = parse_body(&body)?;
    Ok(Json(reg.ingest_batch(&batch)?).into_response())
}

pub fn router(registry: Shared) -> Router {
    Router::new()
        .route("/v1/campaigns", get(list_campaigns).post(submit))
        .route("/v1/campaigns/{id}", get(get_campaign).put(update))
        .route("/v1/campaigns/{id}/review", post(review))
        .route("/v1/campaigns/{id}/stats", get(stats))
        .route("/v1/metrics", post(metrics))
        .with_state(registry)
}
