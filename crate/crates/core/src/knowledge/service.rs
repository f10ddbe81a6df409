use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use axum::extract::{Query, State};
use axum::routing::{get, post};
use axum::{Json, Router};
use parking_lot::{Mutex, RwLock};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::http::{self, ApiError};
use crate::rdf::parse_ntriples;

use super::ontology::{Ontology, PropertyDecl};

/// The active ontology. Replacement swaps the whole `Arc`, so readers see
/// either the old or the new ontology.
#[derive(Clone, Default)]
pub struct KnowledgeBase {
    active: Arc<RwLock<Arc<Ontology>>>,
}

impl KnowledgeBase {
    pub fn new(ontology: Ontology) -> Self {
        KnowledgeBase {
            active: Arc::new(RwLock::new(Arc::new(ontology))),
        }
    }

    pub fn snapshot(&self) -> Arc<Ontology> {
        self.active.read().clone()
    }

    pub fn replace(&self, ontology: Ontology) {
        *self.active.write() = Arc::new(ontology);
    }

    /// Parses and installs an N-Triples ontology document.
    pub fn load_text(&self, text: &str) -> Result<Arc<Ontology>, ApiError> {
        let graph = parse_ntriples(text).map_err(|e| ApiError::bad_request(e.to_string()))?;
        let onto = Ontology::load(&graph).map_err(|e| ApiError::bad_request(e.to_string()))?;
        self.replace(onto);
        Ok(self.snapshot())
    }
}

#[derive(Deserialize)]
struct SubclassParams {
    sub: String,
    sup: String,
}

#[derive(Deserialize)]
struct ClassParam {
    class: String,
}

#[derive(Deserialize)]
struct IriParam {
    iri: String,
}

/// Query parameters may carry IRIs bare or wrapped in angle brackets.
fn strip_brackets(s: &str) -> &str {
    s.strip_prefix('<').and_then(|s| s.strip_suffix('>')).unwrap_or(s)
}

pub fn router(kb: KnowledgeBase) -> Router {
    Router::new()
        .route("/health", get(http::health))
        .route("/ontology", post(put_ontology))
        .route("/is-subclass", get(is_subclass))
        .route("/subclasses", get(subclasses))
        .route("/has-class", get(has_class))
        .route("/property", get(property))
        .with_state(kb)
}

async fn put_ontology(State(kb): State<KnowledgeBase>, body: String) -> Result<Json<Value>, ApiError> {
    let onto = kb.load_text(&body)?;
    Ok(Json(json!({
        "classes": onto.classes().len(),
        "subClassOf": onto.subclass_edges().count(),
        "properties": onto.properties().count(),
    })))
}

async fn is_subclass(State(kb): State<KnowledgeBase>, Query(p): Query<SubclassParams>) -> Json<Value> {
    let result = kb
        .snapshot()
        .is_subclass(strip_brackets(&p.sub), strip_brackets(&p.sup));
    Json(json!({ "result": result }))
}

async fn subclasses(State(kb): State<KnowledgeBase>, Query(p): Query<ClassParam>) -> Json<Vec<String>> {
    Json(
        kb.snapshot()
            .subclasses_of(strip_brackets(&p.class))
            .into_iter()
            .collect(),
    )
}

async fn has_class(State(kb): State<KnowledgeBase>, Query(p): Query<ClassParam>) -> Json<Value> {
    Json(json!({ "result": kb.snapshot().has_class(strip_brackets(&p.class)) }))
}

async fn property(State(kb): State<KnowledgeBase>, Query(p): Query<IriParam>) -> Result<Json<PropertyDecl>, ApiError> {
    let iri = strip_brackets(&p.iri);
    kb.snapshot()
        .lookup_property(iri)
        .cloned()
        .map(Json)
        .ok_or_else(|| ApiError::not_found(format!("no property {iri}")))
}

/// Source of subtype expansions for type-based matching.
#[async_trait]
pub trait TypeHierarchy: Send + Sync {
    /// All subclasses of `class`, including `class` itself.
    async fn subclasses_of(&self, class: &str) -> BTreeSet<String>;
}

/// Exact type matching only.
pub struct FlatHierarchy;

#[async_trait]
impl TypeHierarchy for FlatHierarchy {
    async fn subclasses_of(&self, class: &str) -> BTreeSet<String> {
        BTreeSet::from([class.to_string()])
    }
}

#[async_trait]
impl TypeHierarchy for KnowledgeBase {
    async fn subclasses_of(&self, class: &str) -> BTreeSet<String> {
        self.snapshot().subclasses_of(class)
    }
}

/// Client of a remote knowledge server with a time-bounded response cache.
pub struct RemoteHierarchy {
    base_url: String,
    client: reqwest::Client,
    ttl: Duration,
    cache: Mutex<HashMap<String, (Instant, BTreeSet<String>)>>,
}

impl RemoteHierarchy {
    pub const DEFAULT_TTL: Duration = Duration::from_secs(5);

    pub fn new(base_url: impl Into<String>) -> Self {
        Self::with_ttl(base_url, Self::DEFAULT_TTL)
    }

    pub fn with_ttl(base_url: impl Into<String>, ttl: Duration) -> Self {
        RemoteHierarchy {
            base_url: base_url.into(),
            client: http::client(),
            ttl,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// Whether the server declares `class`; `None` when it cannot be asked.
    pub async fn has_class(&self, class: &str) -> Option<bool> {
        let url = http::join_url(&self.base_url, "/has-class");
        let resp = self.client.get(url).query(&[("class", class)]).send().await.ok()?;
        let body: Value = resp.error_for_status().ok()?.json().await.ok()?;
        body["result"].as_bool()
    }

    async fn fetch(&self, class: &str) -> Result<BTreeSet<String>, reqwest::Error> {
        let url = http::join_url(&self.base_url, "/subclasses");
        let list: Vec<String> = self
            .client
            .get(url)
            .query(&[("class", class)])
            .send()
            .await?
            .error_for_status()?
            .json()
            .await?;
        Ok(list.into_iter().collect())
    }
}

#[async_trait]
impl TypeHierarchy for RemoteHierarchy {
    async fn subclasses_of(&self, class: &str) -> BTreeSet<String> {
        if let Some((at, set)) = self.cache.lock().get(class) {
            if at.elapsed() < self.ttl {
                return set.clone();
            }
        }
        match self.fetch(class).await {
            Ok(mut set) => {
                set.insert(class.to_string());
                self.cache
                    .lock()
                    .insert(class.to_string(), (Instant::now(), set.clone()));
                set
            }
            Err(e) => {
                tracing::warn!(class, error = %e, "knowledge server unavailable; using exact type match");
                BTreeSet::from([class.to_string()])
            }
        }
    }
}
