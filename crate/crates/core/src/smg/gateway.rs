use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::{Mutex, RwLock};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;
use tokio::sync::mpsc;
use tokio::task::JoinHandle;

use crate::cse::{CseClient, CseClientError, ResourceType};
use crate::http::{self, ServiceHandle};
use crate::knowledge::RemoteHierarchy;
use crate::ngsi::{
    compile_id, ContextAttribute, ContextEntity, ContextMetadata, EntityPattern, NgsiClient, QueryContextRequest,
    Registration, UpdateAction,
};
use crate::rdf::vocab::MED_ATTRIBUTE_NAME;
use crate::rdf::{parse_ntriples, Graph};

use super::config::{GatewayConfig, Mode};
use super::convert::{ConversionError, Routine};
use super::process::{load_library, select_process, Process, ProcessError};
use super::reason::{resolve_targets, ResolvedTarget};

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error(transparent)]
    Cse(#[from] CseClientError),
    #[error("{0}: no semantic descriptor")]
    NoDescriptor(String),
    #[error("{path}: descriptor does not parse: {message}")]
    BadDescriptor { path: String, message: String },
    #[error("{0}: no transformation process matches the descriptor")]
    NoProcessFound(String),
    #[error("{0}: no mapping could be resolved")]
    ReasoningFailed(String),
    #[error("{path}: subscription failed: {source}")]
    SubscriptionFailed { path: String, source: CseClientError },
    #[error("{0}: registration with the broker failed")]
    RegistrationFailed(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ItemError {
    #[error("no value at {pointer} in {content}")]
    Extraction { pointer: String, content: String },
    #[error(transparent)]
    Conversion(#[from] ConversionError),
}

/// The NGSI entity carrying one converted contentInstance.
pub fn convert_item(target: &ResolvedTarget, routine: &Routine, resource: &Value) -> Result<ContextEntity, ItemError> {
    let content = match &resource["con"] {
        Value::String(s) => serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.clone())),
        other => other.clone(),
    };
    let raw = content
        .pointer(&target.value_path)
        .ok_or_else(|| ItemError::Extraction {
            pointer: target.value_path.clone(),
            content: content.to_string(),
        })?;
    let value = routine.apply(raw)?;
    let mut attr = ContextAttribute::new(&target.attribute_name, value);
    if let Some(unit) = routine
        .output_unit()
        .map(str::to_string)
        .or_else(|| target.unit.clone())
    {
        attr.metadata.push(ContextMetadata::new("unit", "string", json!(unit)));
    }
    if let Some(ct) = resource["ct"].as_str() {
        attr.metadata
            .push(ContextMetadata::new("timestamp", "ISO8601", json!(ct)));
    }
    attr.metadata
        .push(ContextMetadata::new("source", "string", json!(target.source)));
    if let Some((lon, lat)) = target.location {
        attr.metadata
            .push(ContextMetadata::new("location", "point", json!([lon, lat])));
    }
    Ok(ContextEntity::new(&target.entity_id, &target.entity_type).with_attribute(attr))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct TransformationInstance {
    pub instance_id: String,
    pub source_container_path: String,
    pub process_id: String,
    pub conversion_id: String,
    pub target: ResolvedTarget,
    /// False when the knowledge server does not declare the entity type.
    pub type_known: Option<bool>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct GatewayStats {
    pub received: u64,
    pub published: u64,
    pub dropped: u64,
}

#[derive(Default)]
struct Counters {
    received: AtomicU64,
    published: AtomicU64,
    dropped: AtomicU64,
}

#[derive(Default)]
struct Instances {
    by_id: BTreeMap<String, (TransformationInstance, mpsc::UnboundedSender<Value>)>,
    by_container: HashMap<String, Vec<String>>,
    instrumented: BTreeSet<String>,
    counter: u64,
}

/// A Semantic Mediation Gateway: finds annotated containers, subscribes to
/// them and republishes converted items as NGSI context.
pub struct Gateway {
    config: GatewayConfig,
    library: Vec<Process>,
    cse: CseClient,
    ngsi: NgsiClient,
    knowledge: Option<RemoteHierarchy>,
    callback: String,
    scan_lock: tokio::sync::Mutex<()>,
    instances: Mutex<Instances>,
    cache: Arc<RwLock<BTreeMap<String, ContextEntity>>>,
    counters: Arc<Counters>,
}

impl Gateway {
    pub fn new(config: GatewayConfig, callback: String) -> Result<Gateway, ProcessError> {
        let library = load_library(&config.processes)?;
        Ok(Gateway {
            cse: CseClient::new(&config.cse_url),
            ngsi: NgsiClient::new(&config.broker_url),
            knowledge: config.knowledge_url.as_ref().map(RemoteHierarchy::new),
            library,
            callback,
            config,
            scan_lock: tokio::sync::Mutex::new(()),
            instances: Mutex::new(Instances::default()),
            cache: Arc::new(RwLock::new(BTreeMap::new())),
            counters: Arc::new(Counters::default()),
        })
    }

    pub fn config(&self) -> &GatewayConfig {
        &self.config
    }

    pub fn callback_url(&self) -> &str {
        &self.callback
    }

    pub fn stats(&self) -> GatewayStats {
        GatewayStats {
            received: self.counters.received.load(Ordering::SeqCst),
            published: self.counters.published.load(Ordering::SeqCst),
            dropped: self.counters.dropped.load(Ordering::SeqCst),
        }
    }

    pub fn instances(&self) -> Vec<TransformationInstance> {
        self.instances.lock().by_id.values().map(|(i, _)| i.clone()).collect()
    }

    /// Pull-mode cache contents, ordered by entity id.
    pub fn cached(&self) -> Vec<ContextEntity> {
        self.cache.read().values().cloned().collect()
    }

    /// Discovers annotated containers and instruments the new ones. Returns
    /// the number of instances created by this scan.
    pub async fn scan(&self) -> Result<usize, GatewayError> {
        let _guard = self.scan_lock.lock().await;
        let smf = format!("ASK {{ ?s <{MED_ATTRIBUTE_NAME}> ?n }}");
        let paths = self
            .cse
            .discover(
                &self.config.discovery_root,
                Some(ResourceType::Container),
                &[],
                Some(&smf),
            )
            .await?;
        let mut created = 0;
        for path in paths {
            if self.instances.lock().instrumented.contains(&path) {
                continue;
            }
            match self.instrument(&path).await {
                Ok(n) => created += n,
                Err(GatewayError::Cse(e)) => return Err(GatewayError::Cse(e)),
                Err(e) => tracing::warn!(error = %e, "source skipped"),
            }
        }
        Ok(created)
    }

    async fn descriptor(&self, container: &str) -> Result<Graph, GatewayError> {
        let found = self
            .cse
            .discover(container, Some(ResourceType::SemanticDescriptor), &[], None)
            .await?;
        let direct = found
            .into_iter()
            .find(|p| {
                p.strip_prefix(container)
                    .and_then(|rest| rest.strip_prefix('/'))
                    .is_some_and(|n| !n.contains('/'))
            })
            .ok_or_else(|| GatewayError::NoDescriptor(container.to_string()))?;
        let sd = self.cse.retrieve(&direct).await?;
        let text = sd["dsp"].as_str().unwrap_or_default();
        parse_ntriples(text).map_err(|e| GatewayError::BadDescriptor {
            path: direct,
            message: e.to_string(),
        })
    }

    async fn instrument(&self, container: &str) -> Result<usize, GatewayError> {
        let descriptor = self.descriptor(container).await?;
        let process = select_process(&descriptor, &self.library)
            .ok_or_else(|| GatewayError::NoProcessFound(container.to_string()))?
            .clone();
        let mut targets = Vec::new();
        for resolved in resolve_targets(&descriptor, container) {
            match resolved {
                Ok(t) => targets.push(t),
                Err(e) => tracing::warn!(container, error = %e, "mapping skipped"),
            }
        }
        if targets.is_empty() {
            return Err(GatewayError::ReasoningFailed(container.to_string()));
        }

        let mut ids = Vec::new();
        for target in targets {
            let type_known = match &self.knowledge {
                Some(k) => k.has_class(&target.entity_type).await,
                None => None,
            };
            if type_known == Some(false) {
                tracing::warn!(entity_type = %target.entity_type, "entity type is not declared in the ontology");
            }
            if self.config.mode == Mode::Pull {
                let reg = Registration {
                    registration_id: String::new(),
                    entities: vec![EntityPattern::id(&target.entity_id).with_type(&target.entity_type)],
                    attributes: vec![target.attribute_name.clone()],
                    providing_application: self.callback.clone(),
                };
                self.ngsi
                    .register(&reg)
                    .await
                    .map_err(|_| GatewayError::RegistrationFailed(container.to_string()))?;
            }
            ids.push(self.spawn_instance(container, &process, target, type_known));
        }

        let body = json!({ "nu": http::join_url(&self.callback, "/notify"), "net": [3] });
        if let Err(source) = self.cse.create(container, ResourceType::Subscription, &body).await {
            self.remove_instances(container);
            return Err(GatewayError::SubscriptionFailed {
                path: container.to_string(),
                source,
            });
        }
        self.instances.lock().instrumented.insert(container.to_string());
        tracing::info!(container, process = %process.id, instances = ids.len(), "source instrumented");
        Ok(ids.len())
    }

    fn spawn_instance(
        &self,
        container: &str,
        process: &Process,
        target: ResolvedTarget,
        type_known: Option<bool>,
    ) -> String {
        let (tx, rx) = mpsc::unbounded_channel();
        let mut inst = self.instances.lock();
        inst.counter += 1;
        let id = format!("ti-{:05}", inst.counter);
        let info = TransformationInstance {
            instance_id: id.clone(),
            source_container_path: container.to_string(),
            process_id: process.id.clone(),
            conversion_id: process.routine.id(),
            target: target.clone(),
            type_known,
        };
        let worker = InstanceWorker {
            instance_id: id.clone(),
            target,
            routine: process.routine.clone(),
            mode: self.config.mode,
            ngsi: self.ngsi.clone(),
            cache: self.cache.clone(),
            counters: self.counters.clone(),
        };
        tokio::spawn(worker.run(rx));
        inst.by_container
            .entry(container.to_string())
            .or_default()
            .push(id.clone());
        inst.by_id.insert(id.clone(), (info, tx));
        id
    }

    fn remove_instances(&self, container: &str) {
        let mut inst = self.instances.lock();
        for id in inst.by_container.remove(container).unwrap_or_default() {
            inst.by_id.remove(&id);
        }
    }

    /// Routes a oneM2M notification to the instances of its container.
    pub fn on_notify(&self, body: &Value) -> usize {
        let Some(sub_ref) = body["subscriptionRef"].as_str() else {
            tracing::warn!("notification without subscriptionRef");
            return 0;
        };
        let resource = &body["resource"];
        if resource["ty"] != json!(ResourceType::ContentInstance.code()) {
            return 0;
        }
        self.counters.received.fetch_add(1, Ordering::SeqCst);
        let container = sub_ref.rsplit_once('/').map_or(sub_ref, |(parent, _)| parent);
        let inst = self.instances.lock();
        let ids = inst.by_container.get(container).cloned().unwrap_or_default();
        for id in &ids {
            if let Some((_, tx)) = inst.by_id.get(id) {
                let _ = tx.send(resource.clone());
            }
        }
        ids.len()
    }

    /// Provider side of pull mode: answers from the cache with exact type
    /// matching.
    pub fn answer_query(&self, req: &QueryContextRequest) -> Result<Vec<ContextEntity>, http::ApiError> {
        let mut patterns = Vec::new();
        for p in &req.entities {
            patterns.push((compile_id(p)?, p.entity_type.clone()));
        }
        let cache = self.cache.read();
        Ok(cache
            .values()
            .filter(|e| {
                patterns
                    .iter()
                    .any(|(id, ty)| id.matches(&e.id) && ty.as_ref().is_none_or(|t| *t == e.entity_type))
            })
            .map(|e| e.project(&req.attributes))
            .filter(|e| !e.attributes.is_empty())
            .collect())
    }
}

struct InstanceWorker {
    instance_id: String,
    target: ResolvedTarget,
    routine: Routine,
    mode: Mode,
    ngsi: NgsiClient,
    cache: Arc<RwLock<BTreeMap<String, ContextEntity>>>,
    counters: Arc<Counters>,
}

impl InstanceWorker {
    async fn run(self, mut rx: mpsc::UnboundedReceiver<Value>) {
        while let Some(resource) = rx.recv().await {
            let entity = match convert_item(&self.target, &self.routine, &resource) {
                Ok(e) => e,
                Err(e) => {
                    self.counters.dropped.fetch_add(1, Ordering::SeqCst);
                    tracing::warn!(instance = %self.instance_id, error = %e, "item dropped");
                    continue;
                }
            };
            match self.mode {
                Mode::Push => match self.ngsi.update(UpdateAction::Append, vec![entity]).await {
                    Ok(resp) if resp.context_responses.iter().all(|r| r.status_code.code == 200) => {
                        self.counters.published.fetch_add(1, Ordering::SeqCst);
                    }
                    Ok(resp) => {
                        self.counters.dropped.fetch_add(1, Ordering::SeqCst);
                        tracing::error!(instance = %self.instance_id, ?resp, "broker rejected update");
                    }
                    Err(e) => {
                        self.counters.dropped.fetch_add(1, Ordering::SeqCst);
                        tracing::error!(instance = %self.instance_id, error = %e, "broker unreachable; update dropped");
                    }
                },
                Mode::Pull => {
                    let mut cache = self.cache.write();
                    let slot = cache
                        .entry(entity.id.clone())
                        .or_insert_with(|| ContextEntity::new(&entity.id, &entity.entity_type));
                    slot.entity_type = entity.entity_type.clone();
                    for attr in entity.attributes {
                        slot.set_attribute(attr);
                    }
                    self.counters.published.fetch_add(1, Ordering::SeqCst);
                }
            }
        }
    }
}

/// A started gateway: its HTTP endpoints and the periodic re-scan.
pub struct GatewayHandle {
    pub gateway: Arc<Gateway>,
    pub service: ServiceHandle,
    rescan: JoinHandle<()>,
}

impl GatewayHandle {
    pub fn url(&self) -> String {
        self.service.url()
    }

    pub async fn shutdown(self) {
        self.rescan.abort();
        self.service.shutdown().await;
    }
}

/// Binds the gateway's endpoints, runs a first scan and schedules re-scans.
/// A failed first scan is logged; later scans retry.
pub async fn start(config: GatewayConfig) -> anyhow::Result<GatewayHandle> {
    let listener = http::bind(config.port).await?;
    let addr = listener.local_addr()?;
    let callback = config.callback_url.clone().unwrap_or_else(|| format!("http://{addr}"));
    let period = Duration::from_millis(config.rescan_period_millis.max(1));
    let gateway = Arc::new(Gateway::new(config, callback)?);
    let service = http::spawn("smg", listener, super::service::router(gateway.clone()))?;
    if let Err(e) = gateway.scan().await {
        tracing::warn!(error = %e, "initial scan failed");
    }
    let scanner = gateway.clone();
    let rescan = tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        ticker.tick().await;
        loop {
            ticker.tick().await;
            if let Err(e) = scanner.scan().await {
                tracing::warn!(error = %e, "re-scan failed");
            }
        }
    });
    Ok(GatewayHandle {
        gateway,
        service,
        rescan,
    })
}
