use std::time::Duration;

use serde::Deserialize;

use crate::http::{self, DeliveryError};

use super::model::{
    ContextEntity, ContextResponses, DiscoverRequest, QueryContextRequest, Registration, SubscribeRequest,
    UpdateAction, UpdateContextRequest,
};

/// HTTP client for a broker's NGSI-9/10 endpoints.
#[derive(Clone)]
pub struct NgsiClient {
    base: String,
    client: reqwest::Client,
    attempts: u32,
    delay: Duration,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct RegisterResponse {
    registration_id: String,
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SubscribeResponse {
    subscription_id: String,
}

#[derive(Deserialize)]
struct DiscoverResponse {
    registrations: Vec<Registration>,
}

impl NgsiClient {
    pub fn new(base: impl Into<String>) -> Self {
        NgsiClient {
            base: base.into(),
            client: http::client(),
            attempts: 3,
            delay: Duration::from_millis(100),
        }
    }

    pub fn base(&self) -> &str {
        &self.base
    }

    fn url(&self, path: &str) -> String {
        http::join_url(&self.base, path)
    }

    pub async fn update(
        &self,
        action: UpdateAction,
        entities: Vec<ContextEntity>,
    ) -> Result<ContextResponses, DeliveryError> {
        let body = UpdateContextRequest {
            context_elements: entities,
            update_action: action,
        };
        http::post_json(
            &self.client,
            &self.url("/ngsi10/updateContext"),
            &body,
            self.attempts,
            self.delay,
        )
        .await
    }

    pub async fn query(&self, req: &QueryContextRequest) -> Result<Vec<ContextEntity>, DeliveryError> {
        let resp: ContextResponses =
            http::post_json(&self.client, &self.url("/ngsi10/queryContext"), req, 1, self.delay).await?;
        Ok(resp.entities().cloned().collect())
    }

    pub async fn register(&self, reg: &Registration) -> Result<String, DeliveryError> {
        let resp: RegisterResponse = http::post_json(
            &self.client,
            &self.url("/ngsi9/registerContext"),
            reg,
            self.attempts,
            self.delay,
        )
        .await?;
        Ok(resp.registration_id)
    }

    pub async fn discover(&self, req: &DiscoverRequest) -> Result<Vec<Registration>, DeliveryError> {
        let url = self.url("/ngsi9/discoverContextAvailability");
        let resp: DiscoverResponse = http::post_json(&self.client, &url, req, 1, self.delay).await?;
        Ok(resp.registrations)
    }

    pub async fn subscribe(&self, req: &SubscribeRequest) -> Result<String, DeliveryError> {
        let url = self.url("/ngsi10/subscribeContext");
        let resp: SubscribeResponse = http::post_json(&self.client, &url, req, self.attempts, self.delay).await?;
        Ok(resp.subscription_id)
    }
}
