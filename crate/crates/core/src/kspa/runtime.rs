use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context};
use axum::body::Bytes;
use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use crate::http::{self, ApiError, ServiceHandle};
use crate::knowledge::Ontology;
use crate::ngsi::{EntityPattern, NgsiClient, NotifyContext, SubscribeRequest, UpdateAction};
use crate::rdf::parse_ntriples;
use crate::rules::{Rule, RuleBase, RuleSpec};
use crate::sparql::{evaluate, parse_sparql};
use crate::validate::validate_rule;

use super::agent::{Agent, AgentStats};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentSubscription {
    pub entities: Vec<EntityPattern>,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default)]
    pub throttling_millis: u64,
}

/// Agent configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentConfig {
    #[serde(default = "default_agent_id")]
    pub agent_id: String,
    #[serde(default)]
    pub broker_url: String,
    #[serde(default)]
    pub port: u16,
    #[serde(default)]
    pub callback_url: Option<String>,
    pub subscription: AgentSubscription,
    #[serde(default)]
    pub rules: Vec<RuleSpec>,
    /// N-Triples ontology the rules are validated against.
    #[serde(default)]
    pub ontology_file: Option<String>,
    #[serde(default)]
    pub output_entity_suffix: String,
    #[serde(default = "enabled")]
    pub sparql_endpoint_enabled: bool,
}

fn default_agent_id() -> String {
    "kspa".to_string()
}

fn enabled() -> bool {
    true
}

impl AgentConfig {
    /// Reads a config; a relative `ontologyFile` is resolved against the
    /// config's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: AgentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if let (Some(file), Some(dir)) = (&cfg.ontology_file, path.parent()) {
            cfg.ontology_file = Some(dir.join(file).to_string_lossy().into_owned());
        }
        Ok(cfg)
    }
}

/// Validates each rule against the ontology and the rules before it, then
/// builds the rule base.
pub fn checked_rules(specs: &[RuleSpec], onto: &Ontology) -> anyhow::Result<RuleBase> {
    let mut base = RuleBase::new();
    for spec in specs {
        let report = validate_rule(spec, &base, onto, None);
        if !report.passed {
            let details: Vec<String> = report
                .errors
                .iter()
                .map(|e| format!("{}: {}", e.location, e.message))
                .collect();
            bail!("rule {} rejected: {}", spec.rule_id, details.join("; "));
        }
        base.add(Rule::parse(spec)?)?;
    }
    Ok(base)
}

struct Shared {
    agent: Mutex<Agent>,
    queue: mpsc::UnboundedSender<NotifyContext>,
    sparql_enabled: bool,
}

fn router(shared: Arc<Shared>) -> Router {
    Router::new()
        .route("/health", get(http::health))
        .route("/notify", post(notify))
        .route("/sparql", post(sparql))
        .route("/stats", get(stats))
        .route("/view", get(view))
        .with_state(shared)
}

async fn notify(State(shared): State<Arc<Shared>>, body: Bytes) -> Result<Json<Value>, ApiError> {
    let n: NotifyContext =
        http::parse_body(&body).inspect_err(|e| tracing::warn!(error = %e, "malformed notification"))?;
    let _ = shared.queue.send(n);
    Ok(Json(json!({})))
}

async fn sparql(State(shared): State<Arc<Shared>>, body: String) -> Result<Response, ApiError> {
    if !shared.sparql_enabled {
        return Ok((StatusCode::NOT_FOUND, "SPARQL endpoint disabled").into_response());
    }
    let query = parse_sparql(&body).map_err(|e| ApiError::bad_request(e.to_string()))?;
    let graph = shared.agent.lock().knowledge();
    Ok(Json(evaluate(&query, &graph).to_json()).into_response())
}

async fn stats(State(shared): State<Arc<Shared>>) -> Json<AgentStats> {
    Json(shared.agent.lock().stats())
}

async fn view(State(shared): State<Arc<Shared>>) -> String {
    crate::rdf::serialize_ntriples(&shared.agent.lock().knowledge())
}

/// Event loop: one notification at a time, each followed by a rule pass
/// and write-back of new derivations.
async fn run(shared: Arc<Shared>, ngsi: NgsiClient, mut rx: mpsc::UnboundedReceiver<NotifyContext>) {
    while let Some(n) = rx.recv().await {
        let feedback = {
            let mut agent = shared.agent.lock();
            agent.on_notification(&n);
            match agent.apply_rules() {
                Ok(_) => agent.take_feedback(),
                Err(e) => {
                    tracing::error!(error = %e, "rule pass aborted");
                    continue;
                }
            }
        };
        for entity in feedback {
            shared.agent.lock().record_feedback_call();
            if let Err(e) = ngsi.update(UpdateAction::Append, vec![entity]).await {
                tracing::error!(error = %e, "derived fact dropped");
            }
        }
    }
}

pub struct AgentHandle {
    pub service: ServiceHandle,
    shared: Arc<Shared>,
    worker: JoinHandle<()>,
}

impl AgentHandle {
    pub fn url(&self) -> String {
        self.service.url()
    }

    pub fn stats(&self) -> AgentStats {
        self.shared.agent.lock().stats()
    }

    pub async fn shutdown(self) {
        self.worker.abort();
        self.service.shutdown().await;
    }
}

/// Validates the rules, starts the endpoints and subscribes to the broker.
pub async fn start(config: AgentConfig) -> anyhow::Result<AgentHandle> {
    let onto = match &config.ontology_file {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading ontology {path}"))?;
            Ontology::load(&parse_ntriples(&text)?)?
        }
        None => Ontology::new(),
    };
    let rules = checked_rules(&config.rules, &onto)?;
    let listener = http::bind(config.port).await?;
    let addr = listener.local_addr()?;
    let callback = config.callback_url.clone().unwrap_or_else(|| format!("http://{addr}"));
    let (tx, rx) = mpsc::unbounded_channel();
    let shared = Arc::new(Shared {
        agent: Mutex::new(Agent::new(&config.agent_id, rules, &config.output_entity_suffix)),
        queue: tx,
        sparql_enabled: config.sparql_endpoint_enabled,
    });
    let service = http::spawn(&config.agent_id, listener, router(shared.clone()))?;
    let ngsi = NgsiClient::new(&config.broker_url);
    let worker = tokio::spawn(run(shared.clone(), ngsi.clone(), rx));
    let sub = SubscribeRequest {
        entities: config.subscription.entities.clone(),
        attributes: config.subscription.attributes.clone(),
        reference: http::join_url(&callback, "/notify"),
        throttling_millis: config.subscription.throttling_millis,
    };
    if let Err(e) = ngsi.subscribe(&sub).await {
        worker.abort();
        service.shutdown().await;
        bail!("subscribing to {}: {e}", config.broker_url);
    }
    Ok(AgentHandle {
        service,
        shared,
        worker,
    })
}
