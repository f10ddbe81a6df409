//! Semantic validation of ontologies, annotations, rules and queries.

mod checks;
mod datatypes;
mod report;
mod service;

pub use checks::{
    canonical_witness, validate_annotation, validate_annotation_text, validate_ontology, validate_ontology_text,
    validate_rule, validate_sparql,
};
pub use datatypes::lexical_fits;
pub use report::{Category, ValidationError, ValidationReport};
pub use service::{default_whitelist, router, Kind, Validator};
