use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::http::{self, ApiError};
use crate::ngsi::{responses, ContextResponses, QueryContextRequest};

use super::gateway::{Gateway, GatewayStats, TransformationInstance};

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/health", get(http::health))
        .route("/notify", post(notify))
        .route("/ngsi10/queryContext", post(query))
        .route("/rescan", post(rescan))
        .route("/instances", get(instances))
        .route("/stats", get(stats))
        .with_state(gateway)
}

async fn notify(State(gw): State<Arc<Gateway>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let body: Value = http::parse_body(&body)?;
    let routed = gw.on_notify(&body);
    Ok(Json(json!({ "routed": routed })))
}

async fn query(State(gw): State<Arc<Gateway>>, body: Bytes) -> Result<Json<ContextResponses>, ApiError> {
    let req: QueryContextRequest = http::parse_body(&body)?;
    Ok(Json(responses(gw.answer_query(&req)?)))
}

async fn rescan(State(gw): State<Arc<Gateway>>) -> Result<Json<Value>, ApiError> {
    let created = gw
        .scan()
        .await
        .map_err(|e| ApiError::new(502, "CseUnreachable", e.to_string()))?;
    Ok(Json(json!({ "created": created, "instances": gw.instances().len() })))
}

async fn instances(State(gw): State<Arc<Gateway>>) -> Json<Vec<TransformationInstance>> {
    Json(gw.instances())
}

async fn stats(State(gw): State<Arc<Gateway>>) -> Json<GatewayStats> {
    Json(gw.stats())
}
