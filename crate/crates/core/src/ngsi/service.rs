use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::HeaderMap;
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::http::{self, ApiError};

use super::broker::{Broker, BrokerStats, PULL_HEADER};
use super::model::{
    ContextElementResponse, ContextResponses, DiscoverRequest, QueryContextRequest, Registration, StatusCode,
    SubscribeRequest, UpdateContextRequest,
};

pub fn router(broker: Arc<Broker>) -> Router {
    Router::new()
        .route("/health", get(http::health))
        .route("/stats", get(stats))
        .route("/ngsi9/registerContext", post(register))
        .route("/ngsi9/discoverContextAvailability", post(discover))
        .route("/ngsi10/updateContext", post(update))
        .route("/ngsi10/queryContext", post(query))
        .route("/ngsi10/subscribeContext", post(subscribe))
        .route("/ngsi10/unsubscribeContext", post(unsubscribe))
        .with_state(broker)
}

/// Wraps entities as successful context responses.
pub fn responses(entities: Vec<super::model::ContextEntity>) -> ContextResponses {
    ContextResponses {
        context_responses: entities
            .into_iter()
            .map(|e| ContextElementResponse {
                context_element: e,
                status_code: StatusCode::ok(),
            })
            .collect(),
    }
}

async fn stats(State(broker): State<Arc<Broker>>) -> Json<BrokerStats> {
    Json(broker.stats())
}

async fn register(State(broker): State<Arc<Broker>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let reg: Registration = http::parse_body(&body)?;
    let id = broker.register(reg).await?;
    Ok(Json(json!({ "registrationId": id })))
}

async fn discover(State(broker): State<Arc<Broker>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: DiscoverRequest = http::parse_body(&body)?;
    let regs = broker.discover(&req).await?;
    Ok(Json(json!({ "registrations": regs })))
}

async fn update(State(broker): State<Arc<Broker>>, body: Bytes) -> Result<Json<ContextResponses>, ApiError> {
    let req: UpdateContextRequest = http::parse_body(&body)?;
    Ok(Json(broker.update(req).await))
}

async fn query(
    State(broker): State<Arc<Broker>>,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Json<ContextResponses>, ApiError> {
    let req: QueryContextRequest = http::parse_body(&body)?;
    let allow_pull = !headers.contains_key(PULL_HEADER);
    Ok(Json(responses(broker.query(&req, allow_pull).await?)))
}

async fn subscribe(State(broker): State<Arc<Broker>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: SubscribeRequest = http::parse_body(&body)?;
    let throttling = req.throttling_millis;
    let id = broker.subscribe(req).await?;
    Ok(Json(json!({ "subscriptionId": id, "throttlingMillis": throttling })))
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct Unsubscribe {
    subscription_id: String,
}

async fn unsubscribe(State(broker): State<Arc<Broker>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let req: Unsubscribe = http::parse_body(&body)?;
    broker.unsubscribe(&req.subscription_id)?;
    Ok(Json(
        json!({ "subscriptionId": req.subscription_id, "statusCode": StatusCode::ok() }),
    ))
}
