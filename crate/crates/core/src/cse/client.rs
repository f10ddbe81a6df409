use serde_json::Value;
use thiserror::Error;

use crate::http;

use super::model::ResourceType;
use super::service::TYPE_HEADER;

#[derive(Debug, Error)]
pub enum CseClientError {
    #[error("CSE unreachable at {url}: {message}")]
    Unreachable { url: String, message: String },
    #[error("CSE answered {status} for {url}: {body}")]
    Status { url: String, status: u16, body: String },
}

/// HTTP client for a CSE's Mca binding.
#[derive(Clone)]
pub struct CseClient {
    base: String,
    client: reqwest::Client,
}

impl CseClient {
    pub fn new(base: impl Into<String>) -> Self {
        CseClient {
            base: base.into(),
            client: http::client(),
        }
    }

    fn url(&self, path: &str) -> String {
        http::join_url(&self.base, path)
    }

    async fn send(&self, req: reqwest::RequestBuilder, url: &str) -> Result<Value, CseClientError> {
        let unreachable = |e: reqwest::Error| CseClientError::Unreachable {
            url: url.to_string(),
            message: e.to_string(),
        };
        let resp = req.send().await.map_err(unreachable)?;
        let status = resp.status();
        let text = resp.text().await.map_err(unreachable)?;
        if !status.is_success() {
            return Err(CseClientError::Status {
                url: url.to_string(),
                status: status.as_u16(),
                body: text,
            });
        }
        serde_json::from_str(&text).map_err(|e| CseClientError::Unreachable {
            url: url.to_string(),
            message: format!("undecodable body: {e}"),
        })
    }

    pub async fn create(&self, parent: &str, ty: ResourceType, body: &Value) -> Result<Value, CseClientError> {
        let url = self.url(parent);
        let req = self.client.post(&url).header(TYPE_HEADER, ty.code()).json(body);
        self.send(req, &url).await
    }

    pub async fn retrieve(&self, path: &str) -> Result<Value, CseClientError> {
        let url = self.url(path);
        self.send(self.client.get(&url), &url).await
    }

    pub async fn update(&self, path: &str, body: &Value) -> Result<Value, CseClientError> {
        let url = self.url(path);
        self.send(self.client.put(&url).json(body), &url).await
    }

    pub async fn delete(&self, path: &str) -> Result<(), CseClientError> {
        let url = self.url(path);
        self.send(self.client.delete(&url), &url).await.map(|_| ())
    }

    /// Discovery under `root`; returns structured paths.
    pub async fn discover(
        &self,
        root: &str,
        ty: Option<ResourceType>,
        labels: &[String],
        semantic: Option<&str>,
    ) -> Result<Vec<String>, CseClientError> {
        let mut params = vec![("fu".to_string(), "1".to_string())];
        if let Some(ty) = ty {
            params.push(("ty".into(), ty.code().to_string()));
        }
        for l in labels {
            params.push(("lbl".into(), l.clone()));
        }
        if let Some(s) = semantic {
            params.push(("smf".into(), s.to_string()));
        }
        let url = self.url(root);
        let body = self.send(self.client.get(&url).query(&params), &url).await?;
        Ok(body["m2m:uril"]
            .as_array()
            .map(|a| a.iter().filter_map(|v| v.as_str().map(str::to_string)).collect())
            .unwrap_or_default())
    }
}
