use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::State;
use axum::http::{HeaderMap, Method, StatusCode, Uri};
use axum::response::{IntoResponse, Response};
use axum::routing::{any, get};
use axum::{Json, Router};
use serde_json::{json, Value};

use crate::http::{self, ApiError};

use super::model::ResourceType;
use super::tree::{CreateRequest, Cse, CseError, DiscoveryFilter, UpdateRequest};

pub const TYPE_HEADER: &str = "X-M2M-TY";

impl From<CseError> for ApiError {
    fn from(e: CseError) -> Self {
        match e {
            CseError::NotFound(m) => ApiError::not_found(m),
            CseError::Conflict(m) => ApiError::conflict(m),
            CseError::BadRequest(m) => ApiError::bad_request(m),
            CseError::MethodNotAllowed(m) => ApiError::method_not_allowed(m),
        }
    }
}

pub fn router(cse: Arc<Cse>) -> Router {
    Router::new()
        .route("/health", get(http::health))
        .route("/cse", any(dispatch))
        .route("/cse/{*rest}", any(dispatch))
        .with_state(cse)
}

/// Parses `fu`, `ty`, `lbl` and `smf` query parameters. `lbl` may repeat or
/// carry several labels separated by `+`.
pub fn discovery_filter(query: &str) -> Result<Option<DiscoveryFilter>, ApiError> {
    let mut discovery = false;
    let mut filter = DiscoveryFilter::default();
    for (key, value) in url::form_urlencoded::parse(query.as_bytes()) {
        match key.as_ref() {
            "fu" => discovery = value == "1",
            "ty" => {
                let ty = value
                    .parse::<u16>()
                    .ok()
                    .and_then(ResourceType::from_code)
                    .ok_or_else(|| ApiError::bad_request(format!("unknown resource type {value:?}")))?;
                filter.resource_type = Some(ty);
            }
            "lbl" => filter
                .labels
                .extend(value.split(['+', ' ']).filter(|l| !l.is_empty()).map(str::to_string)),
            "smf" => filter.semantic = Some(value.into_owned()),
            _ => {}
        }
    }
    Ok(discovery.then_some(filter))
}

async fn dispatch(
    State(cse): State<Arc<Cse>>,
    method: Method,
    uri: Uri,
    headers: HeaderMap,
    body: Bytes,
) -> Result<Response, ApiError> {
    let path = uri.path();
    match method {
        Method::GET => {
            if let Some(filter) = discovery_filter(uri.query().unwrap_or(""))? {
                let paths = cse.discover(path, &filter)?;
                return Ok(Json(json!({ "m2m:uril": paths })).into_response());
            }
            Ok(Json(cse.retrieve(path)?.to_json()).into_response())
        }
        Method::POST => {
            let ty = headers
                .get(TYPE_HEADER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u16>().ok())
                .and_then(ResourceType::from_code)
                .ok_or_else(|| ApiError::bad_request(format!("missing or unknown {TYPE_HEADER} header")))?;
            let req = CreateRequest::from_json(ty, &json_body(&body)?)?;
            let created = cse.create(path, req)?;
            Ok((StatusCode::CREATED, Json(created.to_json())).into_response())
        }
        Method::PUT => {
            let req = UpdateRequest::from_json(&json_body(&body)?)?;
            Ok(Json(cse.update(path, req)?.to_json()).into_response())
        }
        Method::DELETE => {
            cse.delete(path)?;
            Ok(Json(json!({})).into_response())
        }
        other => Err(ApiError::method_not_allowed(format!("{other} is not supported"))),
    }
}

fn json_body(body: &[u8]) -> Result<Value, ApiError> {
    http::parse_body(body)
}
