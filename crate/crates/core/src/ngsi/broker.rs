use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use parking_lot::RwLock;
use serde::Serialize;
use tokio::sync::mpsc;
use tokio::task::JoinSet;

use crate::http::{self, ApiError};
use crate::knowledge::TypeHierarchy;

use super::model::{
    check_url, compile_id, CompiledPattern, ContextElementResponse, ContextEntity, ContextResponses, DiscoverRequest,
    EntityPattern, IdMatch, NotifyContext, QueryContextRequest, Registration, StatusCode, SubscribeRequest,
    UpdateAction, UpdateContextRequest,
};

/// Header marking a broker-issued pull; receivers must not pull again.
pub const PULL_HEADER: &str = "X-NGSI-Pull";

const DELIVERY_ATTEMPTS: u32 = 3;
const DELIVERY_DELAY: Duration = Duration::from_millis(100);

#[derive(Debug, Default)]
struct Counters {
    update_requests: AtomicU64,
    query_requests: AtomicU64,
    pulls: AtomicU64,
    notifications: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BrokerStats {
    pub update_requests: u64,
    pub query_requests: u64,
    pub pulls: u64,
    pub notifications: u64,
}

struct Subscription {
    id_matchers: Vec<(IdMatch, Option<String>)>,
    attributes: Vec<String>,
    queue: mpsc::UnboundedSender<String>,
}

#[derive(Default)]
struct Store {
    entities: BTreeMap<String, ContextEntity>,
    registrations: BTreeMap<String, Registration>,
    subscriptions: BTreeMap<String, Subscription>,
    counter: u64,
}

impl Store {
    fn fresh_id(&mut self, prefix: &str) -> String {
        self.counter += 1;
        format!("{prefix}-{:05}", self.counter)
    }
}

/// NGSI-9/10 context broker. Writes go through one lock; type expansion,
/// pulls and notifications happen outside it.
pub struct Broker {
    store: Arc<RwLock<Store>>,
    hierarchy: Arc<dyn TypeHierarchy>,
    client: reqwest::Client,
    counters: Arc<Counters>,
}

impl Broker {
    pub fn new(hierarchy: Arc<dyn TypeHierarchy>) -> Self {
        Broker {
            store: Arc::new(RwLock::new(Store::default())),
            hierarchy,
            client: http::client(),
            counters: Arc::new(Counters::default()),
        }
    }

    pub fn stats(&self) -> BrokerStats {
        let c = &self.counters;
        BrokerStats {
            update_requests: c.update_requests.load(Ordering::SeqCst),
            query_requests: c.query_requests.load(Ordering::SeqCst),
            pulls: c.pulls.load(Ordering::SeqCst),
            notifications: c.notifications.load(Ordering::SeqCst),
        }
    }

    /// All stored entities, ordered by id.
    pub fn entities(&self) -> Vec<ContextEntity> {
        self.store.read().entities.values().cloned().collect()
    }

    async fn expand(&self, entity_type: &Option<String>) -> Option<BTreeSet<String>> {
        match entity_type {
            Some(t) => Some(self.hierarchy.subclasses_of(t).await),
            None => None,
        }
    }

    async fn compile(&self, patterns: &[EntityPattern]) -> Result<Vec<CompiledPattern>, ApiError> {
        let mut out = Vec::with_capacity(patterns.len());
        for p in patterns {
            out.push(CompiledPattern {
                id: compile_id(p)?,
                types: self.expand(&p.entity_type).await,
            });
        }
        Ok(out)
    }

    pub async fn register(&self, mut reg: Registration) -> Result<String, ApiError> {
        if reg.entities.is_empty() {
            return Err(ApiError::bad_request("registration needs at least one entity pattern"));
        }
        for p in &reg.entities {
            compile_id(p)?;
        }
        check_url(&reg.providing_application)?;
        let mut store = self.store.write();
        let id = store.fresh_id("reg");
        reg.registration_id = id.clone();
        store.registrations.insert(id.clone(), reg);
        Ok(id)
    }

    /// Registrations whose patterns intersect the request. A registered type
    /// intersects a requested type when it is one of its subtypes.
    pub async fn discover(&self, req: &DiscoverRequest) -> Result<Vec<Registration>, ApiError> {
        let mut requested = Vec::new();
        for p in &req.entities {
            requested.push((compile_id(p)?, self.expand(&p.entity_type).await));
        }
        let registrations: Vec<Registration> = self.store.read().registrations.values().cloned().collect();
        Ok(registrations
            .into_iter()
            .filter(|reg| {
                let attrs_ok = req.attributes.is_empty()
                    || reg.attributes.is_empty()
                    || reg.attributes.iter().any(|a| req.attributes.contains(a));
                attrs_ok
                    && reg.entities.iter().any(|rp| {
                        requested.iter().any(|(qid, qtypes)| {
                            ids_intersect(rp, qid)
                                && match (qtypes, &rp.entity_type) {
                                    (Some(types), Some(t)) => types.contains(t),
                                    _ => true,
                                }
                        })
                    })
            })
            .collect())
    }

    pub async fn update(&self, req: UpdateContextRequest) -> ContextResponses {
        self.counters.update_requests.fetch_add(1, Ordering::SeqCst);
        let mut responses = Vec::with_capacity(req.context_elements.len());
        let mut changed: Vec<(ContextEntity, Vec<String>)> = Vec::new();
        {
            let mut store = self.store.write();
            for element in req.context_elements {
                let status = match element.check() {
                    Err(msg) => StatusCode::new(400, msg),
                    Ok(()) => apply(&mut store.entities, &element, req.update_action),
                };
                if status.code == 200 {
                    let names = element.attributes.iter().map(|a| a.name.clone()).collect();
                    changed.push((store.entities[&element.id].clone(), names));
                }
                responses.push(ContextElementResponse {
                    context_element: element,
                    status_code: status,
                });
            }
        }
        self.signal_subscribers(&changed).await;
        ContextResponses {
            context_responses: responses,
        }
    }

    async fn signal_subscribers(&self, changed: &[(ContextEntity, Vec<String>)]) {
        if changed.is_empty() {
            return;
        }
        type Snapshot = (
            Vec<(IdMatch, Option<String>)>,
            Vec<String>,
            mpsc::UnboundedSender<String>,
        );
        let subs: Vec<Snapshot> = self
            .store
            .read()
            .subscriptions
            .values()
            .map(|s| (s.id_matchers.clone(), s.attributes.clone(), s.queue.clone()))
            .collect();
        let mut expansions: HashMap<String, BTreeSet<String>> = HashMap::new();
        for (matchers, attrs, queue) in subs {
            for (entity, names) in changed {
                if !attrs.is_empty() && !names.iter().any(|n| attrs.contains(n)) {
                    continue;
                }
                let mut hit = false;
                for (id, ty) in &matchers {
                    if !id.matches(&entity.id) {
                        continue;
                    }
                    let Some(ty) = ty else {
                        hit = true;
                        break;
                    };
                    if !expansions.contains_key(ty) {
                        let set = self.hierarchy.subclasses_of(ty).await;
                        expansions.insert(ty.clone(), set);
                    }
                    if expansions[ty].contains(&entity.entity_type) {
                        hit = true;
                        break;
                    }
                }
                if hit {
                    let _ = queue.send(entity.id.clone());
                }
            }
        }
    }

    /// Local matches, plus results pulled from registered providers that may
    /// hold what the local store lacks. `allow_pull` is false for requests
    /// that are themselves pulls.
    pub async fn query(&self, req: &QueryContextRequest, allow_pull: bool) -> Result<Vec<ContextEntity>, ApiError> {
        self.counters.query_requests.fetch_add(1, Ordering::SeqCst);
        if req.entities.is_empty() {
            return Err(ApiError::bad_request("queryContext needs at least one entity pattern"));
        }
        if let Some(r) = &req.restriction {
            r.check()?;
        }
        let compiled = self.compile(&req.entities).await?;
        let mut found: BTreeMap<String, ContextEntity> = {
            let store = self.store.read();
            store
                .entities
                .values()
                .filter(|e| compiled.iter().any(|p| p.matches(e)))
                .map(|e| (e.id.clone(), e.clone()))
                .collect()
        };

        if allow_pull {
            let discover = DiscoverRequest {
                entities: req.entities.clone(),
                attributes: req.attributes.clone(),
            };
            let mut pulls = JoinSet::new();
            for reg in self.discover(&discover).await? {
                let wanted: Vec<String> = if req.attributes.is_empty() {
                    reg.attributes.clone()
                } else if reg.attributes.is_empty() {
                    req.attributes.clone()
                } else {
                    reg.attributes
                        .iter()
                        .filter(|a| req.attributes.contains(a))
                        .cloned()
                        .collect()
                };
                if locally_satisfied(&reg, &wanted, &found) {
                    continue;
                }
                let body = QueryContextRequest {
                    entities: reg.entities.clone(),
                    attributes: wanted,
                    restriction: None,
                };
                let url = http::join_url(&reg.providing_application, "/ngsi10/queryContext");
                let client = self.client.clone();
                self.counters.pulls.fetch_add(1, Ordering::SeqCst);
                pulls.spawn(async move { pull(&client, &url, &body).await });
            }
            while let Some(joined) = pulls.join_next().await {
                let Ok(entities) = joined else { continue };
                for remote in entities {
                    match found.get_mut(&remote.id) {
                        Some(local) => {
                            for attr in remote.attributes {
                                if local.attribute(&attr.name).is_none() {
                                    local.attributes.push(attr);
                                }
                            }
                        }
                        None => {
                            if compiled.iter().any(|p| p.matches(&remote)) {
                                found.insert(remote.id.clone(), remote);
                            }
                        }
                    }
                }
            }
        }

        Ok(found
            .into_values()
            .filter(|e| req.restriction.as_ref().is_none_or(|r| r.admits(e)))
            .map(|e| e.project(&req.attributes))
            .filter(|e| req.attributes.is_empty() || !e.attributes.is_empty())
            .collect())
    }

    pub async fn subscribe(&self, req: SubscribeRequest) -> Result<String, ApiError> {
        if req.entities.is_empty() {
            return Err(ApiError::bad_request("subscription needs at least one entity pattern"));
        }
        check_url(&req.reference)?;
        let mut id_matchers = Vec::new();
        for p in &req.entities {
            id_matchers.push((compile_id(p)?, p.entity_type.clone()));
        }
        let (tx, rx) = mpsc::unbounded_channel();
        let id = {
            let mut store = self.store.write();
            let id = store.fresh_id("sub");
            store.subscriptions.insert(
                id.clone(),
                Subscription {
                    id_matchers,
                    attributes: req.attributes.clone(),
                    queue: tx,
                },
            );
            id
        };
        let worker = NotifyWorker {
            subscription_id: id.clone(),
            reference: req.reference,
            attributes: req.attributes,
            throttle: Duration::from_millis(req.throttling_millis),
            store: self.store.clone(),
            client: self.client.clone(),
            counters: self.counters.clone(),
        };
        tokio::spawn(worker.run(rx));
        Ok(id)
    }

    /// Removes a subscription; pending notifications are still sent.
    pub fn unsubscribe(&self, subscription_id: &str) -> Result<(), ApiError> {
        self.store
            .write()
            .subscriptions
            .remove(subscription_id)
            .map(|_| ())
            .ok_or_else(|| ApiError::not_found(format!("no subscription {subscription_id}")))
    }
}

fn apply(entities: &mut BTreeMap<String, ContextEntity>, element: &ContextEntity, action: UpdateAction) -> StatusCode {
    match (entities.get_mut(&element.id), action) {
        (None, UpdateAction::Append) => {
            if element.entity_type.is_empty() {
                return StatusCode::new(400, "a new entity needs a type");
            }
            entities.insert(element.id.clone(), element.clone());
        }
        (None, UpdateAction::Update) => return StatusCode::new(404, format!("entity {} not found", element.id)),
        (Some(existing), UpdateAction::Update) => {
            if let Some(missing) = element
                .attributes
                .iter()
                .find(|a| existing.attribute(&a.name).is_none())
            {
                return StatusCode::new(404, format!("attribute {} not found on {}", missing.name, element.id));
            }
            for attr in &element.attributes {
                existing.set_attribute(attr.clone());
            }
        }
        (Some(existing), UpdateAction::Append) => {
            if !element.entity_type.is_empty() {
                existing.entity_type = element.entity_type.clone();
            }
            for attr in &element.attributes {
                existing.set_attribute(attr.clone());
            }
        }
    }
    StatusCode::ok()
}

fn ids_intersect(registered: &EntityPattern, requested_id: &IdMatch) -> bool {
    match (&registered.id, requested_id) {
        (Some(id), m) => m.matches(id),
        (None, IdMatch::Exact(id)) => compile_id(registered).is_ok_and(|m| m.matches(id)),
        // Two regular expressions (or a wildcard): assume they may overlap.
        _ => true,
    }
}

/// A registration needs no pull when every entity it names exactly is
/// already stored with all the wanted attributes.
fn locally_satisfied(reg: &Registration, wanted: &[String], found: &BTreeMap<String, ContextEntity>) -> bool {
    !wanted.is_empty()
        && reg.entities.iter().all(|p| match &p.id {
            Some(id) => found
                .get(id)
                .is_some_and(|e| wanted.iter().all(|a| e.attribute(a).is_some())),
            None => false,
        })
}

async fn pull(client: &reqwest::Client, url: &str, body: &QueryContextRequest) -> Vec<ContextEntity> {
    let resp = client.post(url).header(PULL_HEADER, "1").json(body).send().await;
    match resp {
        Ok(r) if r.status().is_success() => match r.json::<ContextResponses>().await {
            Ok(responses) => responses.entities().cloned().collect(),
            Err(e) => {
                tracing::warn!(url, error = %e, "undecodable pull response");
                Vec::new()
            }
        },
        Ok(r) => {
            tracing::warn!(url, status = r.status().as_u16(), "pull rejected");
            Vec::new()
        }
        Err(e) => {
            tracing::warn!(url, error = %e, "provider unreachable");
            Vec::new()
        }
    }
}

/// Sends notifications for one subscription. The first change in a quiet
/// period opens a throttle window; changes arriving inside it are coalesced
/// and the entities' state at the end of the window is sent.
struct NotifyWorker {
    subscription_id: String,
    reference: String,
    attributes: Vec<String>,
    throttle: Duration,
    store: Arc<RwLock<Store>>,
    client: reqwest::Client,
    counters: Arc<Counters>,
}

impl NotifyWorker {
    async fn run(self, mut rx: mpsc::UnboundedReceiver<String>) {
        while let Some(first) = rx.recv().await {
            let mut dirty = BTreeSet::from([first]);
            if !self.throttle.is_zero() {
                tokio::time::sleep(self.throttle).await;
            }
            while let Ok(id) = rx.try_recv() {
                dirty.insert(id);
            }
            let elements: Vec<ContextEntity> = {
                let store = self.store.read();
                dirty
                    .iter()
                    .filter_map(|id| store.entities.get(id))
                    .map(|e| e.project(&self.attributes))
                    .collect()
            };
            let body = NotifyContext {
                subscription_id: self.subscription_id.clone(),
                context_elements: elements,
            };
            match http::post_json_retry(&self.client, &self.reference, &body, DELIVERY_ATTEMPTS, DELIVERY_DELAY).await {
                Ok(_) => {
                    self.counters.notifications.fetch_add(1, Ordering::SeqCst);
                }
                Err(e) => {
                    tracing::error!(subscription = %self.subscription_id, error = %e, "notifyContext dropped");
                }
            }
        }
    }
}
