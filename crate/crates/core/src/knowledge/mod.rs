//! Ontology store answering subsumption and property lookups.

mod ontology;
mod service;

pub use ontology::{is_known_datatype, Ontology, PropertyDecl, StructuralError};
pub use service::{router, FlatHierarchy, KnowledgeBase, RemoteHierarchy, TypeHierarchy};
