use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use chrono::Utc;
use parking_lot::RwLock;
use serde_json::{json, Value};
use thiserror::Error;

use crate::rdf::{parse_ntriples, Graph};
use crate::sparql::{evaluate, parse_sparql, Query};

use super::model::{Payload, Resource, ResourceType};
use super::notify::NotificationSink;

pub const BASE_NAME: &str = "cse";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CseError {
    #[error("not found: {0}")]
    NotFound(String),
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("method not allowed: {0}")]
    MethodNotAllowed(String),
}

fn bad(msg: impl Into<String>) -> CseError {
    CseError::BadRequest(msg.into())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CreateRequest {
    pub ty: ResourceType,
    pub name: Option<String>,
    pub labels: Vec<String>,
    pub payload: Payload,
}

impl CreateRequest {
    pub fn new(ty: ResourceType, name: impl Into<String>, payload: Payload) -> Self {
        CreateRequest {
            ty,
            name: Some(name.into()),
            labels: Vec::new(),
            payload,
        }
    }

    pub fn with_labels(mut self, labels: &[&str]) -> Self {
        self.labels = labels.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Reads `rn`, `lbl` and the type-specific keys from a request body.
    pub fn from_json(ty: ResourceType, body: &Value) -> Result<Self, CseError> {
        let obj = body.as_object().ok_or_else(|| bad("body must be a JSON object"))?;
        let name = match obj.get("rn") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(s.clone()),
            Some(_) => return Err(bad("rn must be a string")),
        };
        let labels = match obj.get("lbl") {
            None | Some(Value::Null) => Vec::new(),
            Some(v) => string_list(v, "lbl")?,
        };
        let payload = match ty {
            ResourceType::Ae | ResourceType::Container | ResourceType::CseBase => Payload::None,
            ResourceType::ContentInstance => {
                let content = obj
                    .get("con")
                    .cloned()
                    .ok_or_else(|| bad("contentInstance requires con"))?;
                let content_info = match obj.get("cnf") {
                    None | Some(Value::Null) => "application/json".to_string(),
                    Some(Value::String(s)) => s.clone(),
                    Some(_) => return Err(bad("cnf must be a string")),
                };
                Payload::ContentInstance { content, content_info }
            }
            ResourceType::SemanticDescriptor => {
                let text = obj
                    .get("dsp")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("semanticDescriptor requires dsp as an N-Triples string"))?;
                Payload::SemanticDescriptor {
                    descriptor: parse_descriptor(text)?,
                }
            }
            ResourceType::Subscription => {
                if let Some(net) = obj.get("net") {
                    check_event_types(net)?;
                }
                let uri = obj
                    .get("nu")
                    .and_then(Value::as_str)
                    .ok_or_else(|| bad("subscription requires nu"))?;
                Payload::Subscription {
                    notification_uri: check_uri(uri)?,
                }
            }
            ResourceType::Group => Payload::Group {
                member_ids: string_list(obj.get("mid").unwrap_or(&json!([])), "mid")?,
            },
        };
        Ok(CreateRequest {
            ty,
            name,
            labels,
            payload,
        })
    }
}

/// Partial update. Absent fields are left unchanged.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UpdateRequest {
    pub labels: Option<Vec<String>>,
    pub descriptor: Option<Graph>,
    pub notification_uri: Option<String>,
    pub member_ids: Option<Vec<String>>,
}

impl UpdateRequest {
    pub fn from_json(body: &Value) -> Result<Self, CseError> {
        let obj = body.as_object().ok_or_else(|| bad("body must be a JSON object"))?;
        let mut req = UpdateRequest::default();
        for (key, value) in obj {
            match key.as_str() {
                "lbl" => req.labels = Some(string_list(value, "lbl")?),
                "dsp" => {
                    let text = value.as_str().ok_or_else(|| bad("dsp must be a string"))?;
                    req.descriptor = Some(parse_descriptor(text)?);
                }
                "nu" => {
                    let uri = value.as_str().ok_or_else(|| bad("nu must be a string"))?;
                    req.notification_uri = Some(check_uri(uri)?);
                }
                "mid" => req.member_ids = Some(string_list(value, "mid")?),
                "rn" | "ri" | "ty" | "ct" | "pi" => return Err(bad(format!("{key} is not updatable"))),
                _ => {}
            }
        }
        Ok(req)
    }
}

fn string_list(v: &Value, key: &str) -> Result<Vec<String>, CseError> {
    v.as_array()
        .and_then(|items| items.iter().map(|i| i.as_str().map(str::to_string)).collect())
        .ok_or_else(|| bad(format!("{key} must be a list of strings")))
}

fn parse_descriptor(text: &str) -> Result<Graph, CseError> {
    parse_ntriples(text).map_err(|e| bad(format!("descriptor: {e}")))
}

fn check_uri(uri: &str) -> Result<String, CseError> {
    let parsed = url::Url::parse(uri).map_err(|e| bad(format!("invalid notification URI {uri:?}: {e}")))?;
    if !matches!(parsed.scheme(), "http" | "https") || parsed.host().is_none() {
        return Err(bad(format!(
            "notification URI must be an absolute http(s) URL: {uri:?}"
        )));
    }
    Ok(uri.to_string())
}

fn check_event_types(net: &Value) -> Result<(), CseError> {
    let ok = match net {
        Value::Array(items) => items.iter().all(|i| i == &json!(3) || i == &json!("childCreated")),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(bad("only the childCreated event type is supported"))
    }
}

fn check_name(name: &str) -> Result<(), CseError> {
    let legal = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.' | '~'));
    if legal {
        Ok(())
    } else {
        Err(bad(format!("illegal resource name {name:?}")))
    }
}

/// Discovery criteria. All given criteria must hold.
#[derive(Debug, Clone, Default)]
pub struct DiscoveryFilter {
    pub resource_type: Option<ResourceType>,
    /// A candidate matches when it carries any of these labels.
    pub labels: Vec<String>,
    pub semantic: Option<String>,
}

#[derive(Default)]
struct Tree {
    by_id: HashMap<String, Resource>,
    by_path: BTreeMap<String, String>,
    children: HashMap<String, BTreeSet<String>>,
    counter: u64,
}

impl Tree {
    fn resolve(&self, path: &str) -> Result<&Resource, CseError> {
        let path = normalize(path);
        self.by_path
            .get(path)
            .and_then(|id| self.by_id.get(id))
            .ok_or_else(|| CseError::NotFound(format!("no resource at {path}")))
    }

    fn child_of_type(&self, parent_id: &str, ty: ResourceType) -> Option<&Resource> {
        self.children
            .get(parent_id)?
            .iter()
            .filter_map(|id| self.by_id.get(id))
            .find(|r| r.ty == ty)
    }

    fn fresh_id(&mut self, ty: ResourceType) -> String {
        let id = format!("{}-{:05}", ty.id_prefix(), self.counter);
        self.counter += 1;
        id
    }
}

fn normalize(path: &str) -> &str {
    let trimmed = path.trim_end_matches('/');
    if trimmed.is_empty() {
        path
    } else {
        trimmed
    }
}

/// The resource tree. Mutations take the write lock, so they are applied
/// one at a time; notifications are handed to the sink while the lock is
/// held, which fixes their order.
pub struct Cse {
    tree: RwLock<Tree>,
    sink: Arc<dyn NotificationSink>,
}

impl Cse {
    pub fn new(sink: Arc<dyn NotificationSink>) -> Self {
        let mut tree = Tree::default();
        let id = tree.fresh_id(ResourceType::CseBase);
        let path = format!("/{BASE_NAME}");
        let base = Resource {
            id: id.clone(),
            name: BASE_NAME.to_string(),
            ty: ResourceType::CseBase,
            parent_id: None,
            path: path.clone(),
            creation_time: Utc::now(),
            labels: Vec::new(),
            payload: Payload::None,
        };
        tree.by_path.insert(path, id.clone());
        tree.by_id.insert(id, base);
        Cse {
            tree: RwLock::new(tree),
            sink,
        }
    }

    pub fn base_path(&self) -> String {
        format!("/{BASE_NAME}")
    }

    pub fn create(&self, parent_path: &str, req: CreateRequest) -> Result<Resource, CseError> {
        let mut tree = self.tree.write();
        let parent = tree.resolve(parent_path)?.clone();
        if !parent.ty.may_contain(req.ty) {
            return Err(bad(format!("a {} cannot be created under a {}", req.ty, parent.ty)));
        }
        if req.ty == ResourceType::SemanticDescriptor
            && tree
                .child_of_type(&parent.id, ResourceType::SemanticDescriptor)
                .is_some()
        {
            return Err(bad(format!("{} already has a semantic descriptor", parent.path)));
        }
        if let Payload::Group { member_ids } = &req.payload {
            if let Some(missing) = member_ids.iter().find(|m| !tree.by_id.contains_key(*m)) {
                return Err(bad(format!("group member {missing} does not exist")));
            }
        }
        if let Some(name) = &req.name {
            check_name(name)?;
            let path = format!("{}/{}", parent.path, name);
            if tree.by_path.contains_key(&path) {
                return Err(CseError::Conflict(format!("{path} already exists")));
            }
        }
        let id = tree.fresh_id(req.ty);
        let name = req.name.unwrap_or_else(|| id.clone());
        let path = format!("{}/{}", parent.path, name);
        if tree.by_path.contains_key(&path) {
            return Err(CseError::Conflict(format!("{path} already exists")));
        }
        let resource = Resource {
            id: id.clone(),
            name,
            ty: req.ty,
            parent_id: Some(parent.id.clone()),
            path: path.clone(),
            creation_time: Utc::now(),
            labels: req.labels,
            payload: req.payload,
        };
        tree.by_path.insert(path, id.clone());
        tree.children.entry(parent.id.clone()).or_default().insert(id.clone());
        tree.by_id.insert(id, resource.clone());

        if resource.ty == ResourceType::ContentInstance {
            let body = resource.to_json();
            let subs = tree.children.get(&parent.id).into_iter().flatten();
            for sub in subs.filter_map(|id| tree.by_id.get(id)) {
                if let Payload::Subscription { notification_uri } = &sub.payload {
                    let notification = json!({
                        "subscriptionRef": sub.path,
                        "event": "childCreated",
                        "resource": body,
                    });
                    self.sink.deliver(&sub.id, notification_uri, notification);
                }
            }
        }
        Ok(resource)
    }

    pub fn retrieve(&self, path: &str) -> Result<Resource, CseError> {
        self.tree.read().resolve(path).cloned()
    }

    pub fn update(&self, path: &str, req: UpdateRequest) -> Result<Resource, CseError> {
        let mut tree = self.tree.write();
        let current = tree.resolve(path)?;
        if current.ty == ResourceType::ContentInstance {
            return Err(CseError::MethodNotAllowed("contentInstances are immutable".into()));
        }
        let mut updated = current.clone();
        if let Some(labels) = req.labels {
            updated.labels = labels;
        }
        match &mut updated.payload {
            Payload::SemanticDescriptor { descriptor } => {
                if let Some(graph) = req.descriptor {
                    *descriptor = graph;
                }
            }
            _ if req.descriptor.is_some() => return Err(bad(format!("{} has no descriptor", updated.path))),
            _ => {}
        }
        match &mut updated.payload {
            Payload::Subscription { notification_uri } => {
                if let Some(uri) = req.notification_uri {
                    *notification_uri = uri;
                }
            }
            _ if req.notification_uri.is_some() => return Err(bad(format!("{} is not a subscription", updated.path))),
            _ => {}
        }
        match &mut updated.payload {
            Payload::Group { member_ids } => {
                if let Some(ids) = req.member_ids {
                    if let Some(missing) = ids.iter().find(|m| !tree.by_id.contains_key(*m)) {
                        return Err(bad(format!("group member {missing} does not exist")));
                    }
                    *member_ids = ids;
                }
            }
            _ if req.member_ids.is_some() => return Err(bad(format!("{} is not a group", updated.path))),
            _ => {}
        }
        tree.by_id.insert(updated.id.clone(), updated.clone());
        Ok(updated)
    }

    /// Removes the resource and its subtree.
    pub fn delete(&self, path: &str) -> Result<(), CseError> {
        let mut tree = self.tree.write();
        let target = tree.resolve(path)?;
        if target.ty == ResourceType::CseBase {
            return Err(CseError::MethodNotAllowed("the CSEBase cannot be deleted".into()));
        }
        let target_id = target.id.clone();
        let parent_id = target.parent_id.clone();
        let mut stack = vec![target_id.clone()];
        while let Some(id) = stack.pop() {
            if let Some(kids) = tree.children.remove(&id) {
                stack.extend(kids);
            }
            if let Some(r) = tree.by_id.remove(&id) {
                tree.by_path.remove(&r.path);
                if r.ty == ResourceType::Subscription {
                    self.sink.cancel(&r.id);
                }
            }
        }
        if let Some(pid) = parent_id {
            if let Some(siblings) = tree.children.get_mut(&pid) {
                siblings.remove(&target_id);
            }
        }
        Ok(())
    }

    /// Paths of all descendants of `root` satisfying `filter`, in path order.
    pub fn discover(&self, root: &str, filter: &DiscoveryFilter) -> Result<Vec<String>, CseError> {
        let query: Option<Query> = match &filter.semantic {
            Some(text) => Some(parse_sparql(text).map_err(|e| bad(format!("semantic filter: {e}")))?),
            None => None,
        };
        let tree = self.tree.read();
        let root = tree.resolve(root)?;
        let prefix = format!("{}/", root.path);
        let mut out = Vec::new();
        for (path, id) in tree.by_path.range(prefix.clone()..) {
            if !path.starts_with(&prefix) {
                break;
            }
            let r = &tree.by_id[id];
            if filter.resource_type.is_some_and(|ty| ty != r.ty) {
                continue;
            }
            if !filter.labels.is_empty() && !filter.labels.iter().any(|l| r.labels.contains(l)) {
                continue;
            }
            if let Some(q) = &query {
                let described = tree
                    .child_of_type(id, ResourceType::SemanticDescriptor)
                    .and_then(Resource::descriptor)
                    .is_some_and(|g| evaluate(q, g).matched());
                if !described {
                    continue;
                }
            }
            out.push(path.clone());
        }
        Ok(out)
    }

    /// Every resource, in path order.
    pub fn resources(&self) -> Vec<Resource> {
        let tree = self.tree.read();
        tree.by_path.values().map(|id| tree.by_id[id].clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.tree.read().by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cse::notify::CaptureSink;

    fn cse() -> (Cse, Arc<CaptureSink>) {
        let sink = Arc::new(CaptureSink::default());
        (Cse::new(sink.clone()), sink)
    }

    fn ae(name: &str) -> CreateRequest {
        CreateRequest::new(ResourceType::Ae, name, Payload::None)
    }

    fn cnt(name: &str) -> CreateRequest {
        CreateRequest::new(ResourceType::Container, name, Payload::None)
    }

    fn cin(name: &str, v: Value) -> CreateRequest {
        CreateRequest::new(
            ResourceType::ContentInstance,
            name,
            Payload::ContentInstance {
                content: v,
                content_info: "application/json".into(),
            },
        )
    }

    fn sub(name: &str) -> CreateRequest {
        CreateRequest::new(
            ResourceType::Subscription,
            name,
            Payload::Subscription {
                notification_uri: "http://127.0.0.1:9/notify".into(),
            },
        )
    }

    fn sd(text: &str) -> CreateRequest {
        CreateRequest::new(
            ResourceType::SemanticDescriptor,
            "sd",
            Payload::SemanticDescriptor {
                descriptor: parse_ntriples(text).unwrap(),
            },
        )
    }

    #[test]
    fn create_ae_under_base() {
        let (cse, _) = cse();
        let r = cse.create("/cse", ae("tempApp")).unwrap();
        assert_eq!(r.path, "/cse/tempApp");
        assert_eq!(r.id, "ae-00001");
        assert_eq!(cse.retrieve("/cse/tempApp/").unwrap(), r);
    }

    #[test]
    fn illegal_pairs_and_conflicts() {
        let (cse, _) = cse();
        cse.create("/cse", ae("a")).unwrap();
        assert!(matches!(
            cse.create("/cse/a", cin("x", json!(1))),
            Err(CseError::BadRequest(_))
        ));
        assert!(matches!(cse.create("/cse", ae("a")), Err(CseError::Conflict(_))));
        assert!(matches!(cse.create("/cse/none", cnt("c")), Err(CseError::NotFound(_))));
        assert!(matches!(cse.create("/cse", ae("a/b")), Err(CseError::BadRequest(_))));
    }

    #[test]
    fn default_name_is_id() {
        let (cse, _) = cse();
        let mut req = ae("x");
        req.name = None;
        let r = cse.create("/cse", req).unwrap();
        assert_eq!(r.name, r.id);
    }

    #[test]
    fn one_descriptor_per_parent() {
        let (cse, _) = cse();
        cse.create("/cse", ae("a")).unwrap();
        cse.create("/cse/a", sd("<http://x/a> <http://x/p> <http://x/b> ."))
            .unwrap();
        let mut second = sd("");
        second.name = Some("sd2".into());
        assert!(matches!(cse.create("/cse/a", second), Err(CseError::BadRequest(_))));
    }

    #[test]
    fn content_instances_are_immutable() {
        let (cse, _) = cse();
        cse.create("/cse", cnt("c")).unwrap();
        cse.create("/cse/c", cin("i", json!({"value": 1}))).unwrap();
        let req = UpdateRequest {
            labels: Some(vec!["x".into()]),
            ..Default::default()
        };
        assert!(matches!(
            cse.update("/cse/c/i", req),
            Err(CseError::MethodNotAllowed(_))
        ));
    }

    #[test]
    fn delete_cascades_and_cancels() {
        let (cse, sink) = cse();
        cse.create("/cse", cnt("c")).unwrap();
        let s = cse.create("/cse/c", sub("s")).unwrap();
        cse.create("/cse/c", cin("i", json!(1))).unwrap();
        cse.delete("/cse/c").unwrap();
        assert!(matches!(cse.retrieve("/cse/c/i"), Err(CseError::NotFound(_))));
        assert_eq!(cse.len(), 1);
        assert_eq!(sink.cancelled(), vec![s.id]);
        assert!(matches!(cse.delete("/cse"), Err(CseError::MethodNotAllowed(_))));
        cse.create("/cse", cnt("c")).unwrap();
    }

    #[test]
    fn notifications_only_for_subscribed_containers() {
        let (cse, sink) = cse();
        cse.create("/cse", cnt("a")).unwrap();
        cse.create("/cse", cnt("b")).unwrap();
        cse.create("/cse/a", sub("s")).unwrap();
        cse.create("/cse/a", cin("1", json!(1))).unwrap();
        cse.create("/cse/b", cin("1", json!(2))).unwrap();
        cse.create("/cse/a", cin("2", json!(3))).unwrap();
        let got = sink.deliveries();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].2["resource"]["con"], json!(1));
        assert_eq!(got[1].2["resource"]["con"], json!(3));
        assert_eq!(got[0].2["subscriptionRef"], "/cse/a/s");
        assert_eq!(got[0].2["event"], "childCreated");
    }

    #[test]
    fn discovery_filters() {
        let (cse, _) = cse();
        cse.create("/cse", ae("app")).unwrap();
        cse.create("/cse/app", cnt("room1").with_labels(&["temp"])).unwrap();
        cse.create("/cse/app", cnt("room2")).unwrap();
        cse.create(
            "/cse/app/room2",
            sd("<http://x/room2> <http://x/med#entityType> <http://x/ont#MeetingRoom> ."),
        )
        .unwrap();
        let containers = DiscoveryFilter {
            resource_type: Some(ResourceType::Container),
            ..Default::default()
        };
        assert_eq!(
            cse.discover("/cse", &containers).unwrap(),
            ["/cse/app/room1", "/cse/app/room2"]
        );
        let labelled = DiscoveryFilter {
            labels: vec!["temp".into(), "other".into()],
            ..Default::default()
        };
        assert_eq!(cse.discover("/cse", &labelled).unwrap(), ["/cse/app/room1"]);
        let semantic = DiscoveryFilter {
            semantic: Some("ASK { ?x <http://x/med#entityType> <http://x/ont#MeetingRoom> }".into()),
            ..Default::default()
        };
        assert_eq!(cse.discover("/cse", &semantic).unwrap(), ["/cse/app/room2"]);
        assert_eq!(cse.discover("/cse/app/room1", &semantic).unwrap(), Vec::<String>::new());
        let broken = DiscoveryFilter {
            semantic: Some("ASK { ?x".into()),
            ..Default::default()
        };
        assert!(matches!(cse.discover("/cse", &broken), Err(CseError::BadRequest(_))));
    }

    #[test]
    fn descriptor_replacement_changes_discovery() {
        let (cse, _) = cse();
        cse.create("/cse", cnt("c")).unwrap();
        cse.create("/cse/c", sd("<http://x/c> <http://x/p> <http://x/A> ."))
            .unwrap();
        let filter = DiscoveryFilter {
            semantic: Some("ASK { ?x <http://x/p> <http://x/B> }".into()),
            ..Default::default()
        };
        assert!(cse.discover("/cse", &filter).unwrap().is_empty());
        let req = UpdateRequest {
            descriptor: Some(parse_ntriples("<http://x/c> <http://x/p> <http://x/B> .").unwrap()),
            ..Default::default()
        };
        cse.update("/cse/c/sd", req).unwrap();
        assert_eq!(cse.discover("/cse", &filter).unwrap(), ["/cse/c"]);
    }

    #[test]
    fn create_request_from_json() {
        let req = CreateRequest::from_json(
            ResourceType::Subscription,
            &json!({"rn": "s", "nu": "http://localhost:1/n", "net": [3]}),
        )
        .unwrap();
        assert_eq!(req.name.as_deref(), Some("s"));
        assert!(CreateRequest::from_json(ResourceType::Subscription, &json!({"nu": "not a url"})).is_err());
        assert!(CreateRequest::from_json(ResourceType::Subscription, &json!({"nu": "mailto:x@y"})).is_err());
        assert!(CreateRequest::from_json(ResourceType::SemanticDescriptor, &json!({"dsp": "<a"})).is_err());
        assert!(CreateRequest::from_json(ResourceType::ContentInstance, &json!({})).is_err());
        assert!(UpdateRequest::from_json(&json!({"rn": "x"})).is_err());
    }
}
