use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::Context;

use crate::cse::{self, Cse, HttpNotifier};
use crate::http::{self, ServiceHandle};
use crate::knowledge::{self, FlatHierarchy, KnowledgeBase, Ontology, RemoteHierarchy, TypeHierarchy};
use crate::ngsi::{self, Broker};
use crate::rdf::parse_ntriples;
use crate::rules::{RuleBase, RuleSpec};
use crate::validate::{self, Validator};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Component {
    Cse,
    Broker,
    Knowledge,
    Validator,
}

impl Component {
    pub fn default_port(self) -> u16 {
        match self {
            Component::Knowledge => 7100,
            Component::Cse => 7101,
            Component::Broker => 7102,
            Component::Validator => 7103,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Component::Cse => "cse",
            Component::Broker => "broker",
            Component::Knowledge => "knowledge",
            Component::Validator => "validator",
        }
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cse" => Ok(Component::Cse),
            "broker" => Ok(Component::Broker),
            "knowledge" => Ok(Component::Knowledge),
            "validator" => Ok(Component::Validator),
            other => Err(format!(
                "unknown component {other:?}; expected cse, broker, knowledge or validator"
            )),
        }
    }
}

/// Optional inputs for `serve`.
#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Knowledge server the broker asks for subtypes.
    pub knowledge_url: Option<String>,
    /// Ontology for the knowledge server, or the validator's reference.
    pub ontology: Option<std::path::PathBuf>,
    pub rules: Option<std::path::PathBuf>,
    pub witness: Option<std::path::PathBuf>,
}

pub fn read_ontology(path: &Path) -> anyhow::Result<Ontology> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let graph = parse_ntriples(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(Ontology::load(&graph)?)
}

pub fn read_rules(path: &Path) -> anyhow::Result<RuleBase> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let specs: Vec<RuleSpec> = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    Ok(RuleBase::from_specs(&specs)?)
}

pub async fn serve_cse(port: u16) -> anyhow::Result<(ServiceHandle, Arc<Cse>)> {
    let listener = http::bind(port).await?;
    let core = Arc::new(Cse::new(Arc::new(HttpNotifier::new())));
    Ok((http::spawn("cse", listener, cse::router(core.clone()))?, core))
}

pub async fn serve_broker(
    port: u16,
    hierarchy: Arc<dyn TypeHierarchy>,
) -> anyhow::Result<(ServiceHandle, Arc<Broker>)> {
    let listener = http::bind(port).await?;
    let core = Arc::new(Broker::new(hierarchy));
    Ok((http::spawn("broker", listener, ngsi::router(core.clone()))?, core))
}

pub async fn serve_knowledge(port: u16, kb: KnowledgeBase) -> anyhow::Result<ServiceHandle> {
    let listener = http::bind(port).await?;
    Ok(http::spawn("knowledge", listener, knowledge::router(kb))?)
}

pub async fn serve_validator(port: u16, validator: Validator) -> anyhow::Result<ServiceHandle> {
    let listener = http::bind(port).await?;
    Ok(http::spawn("validator", listener, validate::router(validator))?)
}

/// Starts one component with its options.
pub async fn serve(component: Component, port: u16, opts: &ServeOptions) -> anyhow::Result<ServiceHandle> {
    match component {
        Component::Cse => Ok(serve_cse(port).await?.0),
        Component::Broker => {
            let hierarchy: Arc<dyn TypeHierarchy> = match &opts.knowledge_url {
                Some(url) => Arc::new(RemoteHierarchy::new(url)),
                None => Arc::new(FlatHierarchy),
            };
            Ok(serve_broker(port, hierarchy).await?.0)
        }
        Component::Knowledge => {
            let onto = match &opts.ontology {
                Some(p) => read_ontology(p)?,
                None => Ontology::new(),
            };
            serve_knowledge(port, KnowledgeBase::new(onto)).await
        }
        Component::Validator => {
            let mut v = Validator::default();
            if let Some(p) = &opts.ontology {
                v.reference = read_ontology(p)?;
            }
            if let Some(p) = &opts.rules {
                v.rules = read_rules(p)?;
            }
            if let Some(p) = &opts.witness {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                v.witness = Some(parse_ntriples(&text)?);
            }
            serve_validator(port, v).await
        }
    }
}
