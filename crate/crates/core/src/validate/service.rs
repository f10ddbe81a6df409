use std::str::FromStr;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::response::Html;
use axum::routing::{get, post};
use axum::{Json, Router};

use crate::http::{self, ApiError};
use crate::knowledge::Ontology;
use crate::rdf::vocab::{MED, OWL, RDF, RDFS};
use crate::rdf::Graph;
use crate::rules::{RuleBase, RuleSpec};

use super::checks::{validate_annotation_text, validate_ontology_text, validate_rule, validate_sparql};
use super::report::{Category, ValidationError, ValidationReport};

const SUBMIT_PAGE: &str = include_str!("assets/submit.html");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Ontology,
    Annotation,
    Rule,
    Sparql,
}

impl FromStr for Kind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ontology" => Ok(Kind::Ontology),
            "annotation" => Ok(Kind::Annotation),
            "rule" => Ok(Kind::Rule),
            "sparql" => Ok(Kind::Sparql),
            other => Err(format!("unknown validation kind {other:?}")),
        }
    }
}

/// Context the validators check payloads against.
#[derive(Debug, Clone)]
pub struct Validator {
    pub reference: Ontology,
    pub rules: RuleBase,
    pub witness: Option<Graph>,
    /// Namespaces exempt from the declared-term check in annotations.
    pub whitelist: Vec<String>,
}

impl Default for Validator {
    fn default() -> Self {
        Validator {
            reference: Ontology::new(),
            rules: RuleBase::new(),
            witness: None,
            whitelist: default_whitelist(),
        }
    }
}

pub fn default_whitelist() -> Vec<String> {
    [MED, RDF, RDFS, OWL].iter().map(|s| s.to_string()).collect()
}

impl Validator {
    pub fn submit(&self, kind: Kind, payload: &str) -> ValidationReport {
        match kind {
            Kind::Ontology => validate_ontology_text(payload, &self.reference),
            Kind::Annotation => validate_annotation_text(payload, &self.reference, &self.whitelist),
            Kind::Rule => match serde_json::from_str::<RuleSpec>(payload) {
                Ok(spec) => validate_rule(&spec, &self.rules, &self.reference, self.witness.as_ref()),
                Err(e) => ValidationReport::timed(|| {
                    vec![ValidationError::new(
                        Category::Syntactic,
                        format!("line {}, column {}", e.line(), e.column()),
                        format!("malformed rule JSON: {e}"),
                    )]
                }),
            },
            Kind::Sparql => validate_sparql(payload),
        }
    }
}

pub fn router(validator: Validator) -> Router {
    Router::new()
        .route("/", get(|| async { Html(SUBMIT_PAGE) }))
        .route("/health", get(http::health))
        .route("/validate/{kind}", post(submit))
        .with_state(Arc::new(validator))
}

async fn submit(
    State(validator): State<Arc<Validator>>,
    Path(kind): Path<String>,
    body: String,
) -> Result<Json<ValidationReport>, ApiError> {
    let kind: Kind = kind.parse().map_err(ApiError::bad_request)?;
    Ok(Json(validator.submit(kind, &body)))
}
