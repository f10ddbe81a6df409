use std::collections::HashMap;
use std::time::Duration;

use parking_lot::Mutex;
use serde_json::Value;
use tokio::runtime::Handle;
use tokio::sync::mpsc;

use crate::http;

/// Receives notifications in creation order. Implementations must not block:
/// `deliver` is called while the tree's write lock is held.
pub trait NotificationSink: Send + Sync {
    fn deliver(&self, subscription_id: &str, uri: &str, notification: Value);

    /// The subscription was deleted; queued deliveries may still drain.
    fn cancel(&self, _subscription_id: &str) {}
}

/// Records notifications instead of sending them.
#[derive(Default)]
pub struct CaptureSink {
    delivered: Mutex<Vec<(String, String, Value)>>,
    cancelled: Mutex<Vec<String>>,
}

impl CaptureSink {
    pub fn deliveries(&self) -> Vec<(String, String, Value)> {
        self.delivered.lock().clone()
    }

    pub fn cancelled(&self) -> Vec<String> {
        self.cancelled.lock().clone()
    }
}

impl NotificationSink for CaptureSink {
    fn deliver(&self, subscription_id: &str, uri: &str, notification: Value) {
        self.delivered
            .lock()
            .push((subscription_id.to_string(), uri.to_string(), notification));
    }

    fn cancel(&self, subscription_id: &str) {
        self.cancelled.lock().push(subscription_id.to_string());
    }
}

/// POSTs notifications over HTTP. Each subscription gets its own queue and
/// worker task, so one slow endpoint does not hold up the others and each
/// subscription's notifications go out in order.
pub struct HttpNotifier {
    client: reqwest::Client,
    runtime: Handle,
    attempts: u32,
    delay: Duration,
    queues: Mutex<HashMap<String, mpsc::UnboundedSender<(String, Value)>>>,
}

impl HttpNotifier {
    pub const ATTEMPTS: u32 = 3;
    pub const RETRY_DELAY: Duration = Duration::from_millis(100);

    /// Must be called from within a tokio runtime; workers run on it.
    pub fn new() -> Self {
        Self::with_retry(Self::ATTEMPTS, Self::RETRY_DELAY)
    }

    pub fn with_retry(attempts: u32, delay: Duration) -> Self {
        HttpNotifier {
            client: http::client(),
            runtime: Handle::current(),
            attempts,
            delay,
            queues: Mutex::new(HashMap::new()),
        }
    }

    fn worker(&self, subscription_id: &str) -> mpsc::UnboundedSender<(String, Value)> {
        let (tx, mut rx) = mpsc::unbounded_channel::<(String, Value)>();
        let client = self.client.clone();
        let (attempts, delay) = (self.attempts, self.delay);
        let sub = subscription_id.to_string();
        self.runtime.spawn(async move {
            while let Some((uri, body)) = rx.recv().await {
                if let Err(e) = http::post_json_retry(&client, &uri, &body, attempts, delay).await {
                    tracing::error!(subscription = %sub, error = %e, "notification dropped after retries");
                }
            }
        });
        tx
    }
}

impl Default for HttpNotifier {
    fn default() -> Self {
        Self::new()
    }
}

impl NotificationSink for HttpNotifier {
    fn deliver(&self, subscription_id: &str, uri: &str, notification: Value) {
        let mut queues = self.queues.lock();
        let tx = queues
            .entry(subscription_id.to_string())
            .or_insert_with(|| self.worker(subscription_id));
        if tx.send((uri.to_string(), notification)).is_err() {
            tracing::error!(subscription = subscription_id, "notification worker is gone");
        }
    }

    fn cancel(&self, subscription_id: &str) {
        self.queues.lock().remove(subscription_id);
    }
}
