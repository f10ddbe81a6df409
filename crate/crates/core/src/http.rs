//! Shared HTTP plumbing: error bodies, listener binding, service lifecycle
//! and outbound JSON posting with bounded retries.

use std::io;
use std::net::SocketAddr;
use std::time::Duration;

use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;
use thiserror::Error;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// Error returned by every service endpoint as `{"error", "message"}`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{code}: {message}")]
pub struct ApiError {
    pub status: u16,
    pub code: String,
    pub message: String,
}

impl ApiError {
    pub fn new(status: u16, code: &str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code: code.to_string(),
            message: message.into(),
        }
    }

    pub fn bad_request(message: impl Into<String>) -> Self {
        Self::new(400, "BadRequest", message)
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        Self::new(404, "NotFound", message)
    }

    pub fn method_not_allowed(message: impl Into<String>) -> Self {
        Self::new(405, "MethodNotAllowed", message)
    }

    pub fn conflict(message: impl Into<String>) -> Self {
        Self::new(409, "Conflict", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.status).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        (status, Json(json!({ "error": self.code, "message": self.message }))).into_response()
    }
}

#[derive(Debug, Error)]
pub enum ServeError {
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("cannot bind port {port}: {source}")]
    Bind { port: u16, source: io::Error },
}

/// Binds 127.0.0.1:`port`; port 0 picks an ephemeral port.
pub async fn bind(port: u16) -> Result<TcpListener, ServeError> {
    TcpListener::bind(("127.0.0.1", port)).await.map_err(|source| {
        if source.kind() == io::ErrorKind::AddrInUse {
            ServeError::PortInUse(port)
        } else {
            ServeError::Bind { port, source }
        }
    })
}

/// A running HTTP service. Dropping the handle does not stop the service;
/// call [`ServiceHandle::shutdown`].
pub struct ServiceHandle {
    pub name: String,
    pub addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    join: JoinHandle<()>,
}

impl ServiceHandle {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    /// Stops accepting connections and waits until the listener is closed.
    pub async fn shutdown(mut self) {
        if let Some(stop) = self.stop.take() {
            let _ = stop.send(());
        }
        let abort = self.join.abort_handle();
        if tokio::time::timeout(Duration::from_secs(3), &mut self.join)
            .await
            .is_err()
        {
            abort.abort();
        }
    }

    /// Blocks until the service exits.
    pub async fn wait(self) {
        let _ = self.join.await;
    }
}

pub fn spawn(name: &str, listener: TcpListener, router: Router) -> io::Result<ServiceHandle> {
    let addr = listener.local_addr()?;
    let (stop, stopped) = oneshot::channel::<()>();
    let service_name = name.to_string();
    let join = tokio::spawn(async move {
        let result = axum::serve(listener, router)
            .with_graceful_shutdown(async move {
                let _ = stopped.await;
            })
            .await;
        if let Err(e) = result {
            tracing::error!(service = %service_name, error = %e, "server exited with error");
        }
    });
    tracing::info!(service = name, %addr, "listening");
    Ok(ServiceHandle {
        name: name.to_string(),
        addr,
        stop: Some(stop),
        join,
    })
}

pub async fn health() -> Json<serde_json::Value> {
    Json(json!({ "status": "ok" }))
}

pub fn client() -> reqwest::Client {
    reqwest::Client::builder()
        .timeout(Duration::from_secs(5))
        .build()
        .expect("http client builds")
}

#[derive(Debug, Error)]
pub enum DeliveryError {
    #[error("{url}: HTTP {status}")]
    Status { url: String, status: u16 },
    #[error("{url}: {message}")]
    Transport { url: String, message: String },
    #[error("{url}: undecodable response: {message}")]
    Decode { url: String, message: String },
}

/// POSTs `body` as JSON, retrying up to `attempts` times with `delay` between
/// tries. Non-2xx responses count as failures.
pub async fn post_json_retry<T: Serialize + ?Sized>(
    client: &reqwest::Client,
    url: &str,
    body: &T,
    attempts: u32,
    delay: Duration,
) -> Result<reqwest::Response, DeliveryError> {
    let mut last = None;
    for attempt in 0..attempts.max(1) {
        if attempt > 0 {
            tokio::time::sleep(delay).await;
        }
        match client.post(url).json(body).send().await {
            Ok(resp) if resp.status().is_success() => return Ok(resp),
            Ok(resp) => {
                last = Some(DeliveryError::Status {
                    url: url.to_string(),
                    status: resp.status().as_u16(),
                })
            }
            Err(e) => {
                last = Some(DeliveryError::Transport {
                    url: url.to_string(),
                    message: e.to_string(),
                })
            }
        }
    }
    Err(last.expect("at least one attempt"))
}

/// [`post_json_retry`] followed by decoding the JSON response.
pub async fn post_json<B: Serialize + ?Sized, T: DeserializeOwned>(
    client: &reqwest::Client,
    url: &str,
    body: &B,
    attempts: u32,
    delay: Duration,
) -> Result<T, DeliveryError> {
    let resp = post_json_retry(client, url, body, attempts, delay).await?;
    resp.json().await.map_err(|e| DeliveryError::Decode {
        url: url.to_string(),
        message: e.to_string(),
    })
}

/// Decodes a request body, reporting failures as 400 in the common error shape.
pub fn parse_body<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError::bad_request(format!("malformed JSON body: {e}")))
}

pub fn join_url(base: &str, path: &str) -> String {
    format!("{}/{}", base.trim_end_matches('/'), path.trim_start_matches('/'))
}
