use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use serde_json::{json, Value};

use crate::ngsi::{ContextAttribute, ContextEntity, ContextMetadata, NotifyContext};
use crate::rdf::vocab::{CTX, RDF_TYPE};
use crate::rdf::{Graph, Term, Triple};
use crate::rules::{forward_chain, BoundExceeded, RuleBase, DERIVATION_BOUND};
use crate::smg::{entity_id_for, entity_iri_for};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AgentStats {
    pub notifications: u64,
    pub passes: u64,
    pub derived_facts: u64,
    pub feedback_calls: u64,
    pub self_attributes_ignored: u64,
    pub bound_exceeded: u64,
}

/// Lexical form of an NGSI value in the triple view.
pub fn value_lexical(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Agent state: the triple view of received context, the last pass's
/// derivations and the facts already written back.
pub struct Agent {
    id: String,
    rules: RuleBase,
    suffix: String,
    /// (entity id, attribute) -> current triple.
    facts: BTreeMap<(String, String), Triple>,
    types: BTreeMap<String, String>,
    derived: Graph,
    fed_back: BTreeSet<Triple>,
    own_attributes: BTreeSet<(String, String)>,
    stats: AgentStats,
}

impl Agent {
    pub fn new(id: &str, rules: RuleBase, output_suffix: &str) -> Self {
        Agent {
            id: id.to_string(),
            rules,
            suffix: output_suffix.to_string(),
            facts: BTreeMap::new(),
            types: BTreeMap::new(),
            derived: Graph::new(),
            fed_back: BTreeSet::new(),
            own_attributes: BTreeSet::new(),
            stats: AgentStats::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn stats(&self) -> AgentStats {
        self.stats
    }

    /// ⟨E, rdf:type, T⟩ and ⟨E, ctx:A, "v"⟩ for the latest value of each
    /// attribute.
    pub fn view(&self) -> Graph {
        let mut g: Graph = self.facts.values().cloned().collect();
        for (entity, ty) in &self.types {
            let (Ok(s), Ok(o)) = (Term::iri(entity_iri_for(entity)), Term::iri(ty.as_str())) else {
                continue;
            };
            if let Ok(t) = Triple::new(s, Term::iri(RDF_TYPE).expect("rdf:type is an IRI"), o) {
                g.insert(t);
            }
        }
        g
    }

    /// View plus the most recent derivations.
    pub fn knowledge(&self) -> Graph {
        self.view().union(&self.derived)
    }

    /// Folds a notification into the view. Attributes this agent wrote
    /// itself are skipped.
    pub fn on_notification(&mut self, n: &NotifyContext) {
        self.stats.notifications += 1;
        for entity in &n.context_elements {
            if !entity.entity_type.is_empty() {
                self.types.insert(entity.id.clone(), entity.entity_type.clone());
            }
            let Ok(subject) = Term::iri(entity_iri_for(&entity.id)) else {
                tracing::warn!(entity = %entity.id, "entity id cannot form an IRI");
                continue;
            };
            for attr in &entity.attributes {
                let key = (entity.id.clone(), attr.name.clone());
                if self.own_attributes.contains(&key) {
                    self.stats.self_attributes_ignored += 1;
                    continue;
                }
                let (Some(lexical), Ok(p)) = (value_lexical(&attr.value), Term::iri(format!("{CTX}{}", attr.name)))
                else {
                    continue;
                };
                if let Ok(t) = Triple::new(subject.clone(), p, Term::literal(lexical)) {
                    self.facts.insert(key, t);
                }
            }
        }
    }

    /// Forward-chains the rules over the view; returns the triples not
    /// already in it.
    pub fn apply_rules(&mut self) -> Result<&Graph, BoundExceeded> {
        self.stats.passes += 1;
        let view = self.view();
        match forward_chain(&view, self.rules.rules(), DERIVATION_BOUND) {
            Ok(closure) => {
                self.derived = closure
                    .derived()
                    .iter()
                    .filter(|t| !view.contains(t))
                    .cloned()
                    .collect();
                Ok(&self.derived)
            }
            Err(e) => {
                self.stats.bound_exceeded += 1;
                Err(e)
            }
        }
    }

    /// Derived context facts not written back yet, as one entity update
    /// each. Marks them written and their attributes as the agent's own.
    pub fn take_feedback(&mut self) -> Vec<ContextEntity> {
        let mut out = Vec::new();
        let fresh: Vec<Triple> = self
            .derived
            .iter()
            .filter(|t| !self.fed_back.contains(*t))
            .cloned()
            .collect();
        for t in fresh {
            let (Some(s), Some(attr), Some(lit)) = (
                t.subject().as_iri(),
                t.predicate_iri().strip_prefix(CTX),
                t.object().as_literal(),
            ) else {
                continue;
            };
            let entity_id = format!("{}{}", entity_id_for(s), self.suffix);
            let entity_type = self.types.get(&entity_id_for(s)).cloned().unwrap_or_default();
            let attribute = ContextAttribute::new(attr, json!(lit.lexical())).with_metadata(ContextMetadata::new(
                "source",
                "string",
                json!(self.id),
            ));
            out.push(ContextEntity::new(&entity_id, &entity_type).with_attribute(attribute));
            self.own_attributes.insert((entity_id, attr.to_string()));
            self.fed_back.insert(t);
            self.stats.derived_facts += 1;
        }
        out
    }

    pub fn record_feedback_call(&mut self) {
        self.stats.feedback_calls += 1;
    }
}
