use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::rdf::vocab::{
    MED_ATTRIBUTE_NAME, MED_DESCRIBES_ENTITY, MED_ENTITY_TYPE, MED_LOCATION, MED_UNIT_OF_MEASURE, MED_VALUE_PATH,
};
use crate::rdf::{Graph, Term};

/// Prefix stripped from `med:describesEntity` IRIs to form NGSI entity ids.
pub const ENTITY_URN_PREFIX: &str = "urn:entity:";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reasoning failed for {subject}: {message}")]
pub struct ReasoningError {
    pub subject: String,
    pub message: String,
}

/// What the gateway publishes for one mapping subject of a descriptor.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ResolvedTarget {
    pub subject: String,
    pub entity_id: String,
    pub entity_type: String,
    pub attribute_name: String,
    pub unit: Option<String>,
    pub location: Option<(f64, f64)>,
    pub value_path: String,
    pub source: String,
}

pub fn entity_id_for(iri: &str) -> String {
    iri.strip_prefix(ENTITY_URN_PREFIX).unwrap_or(iri).to_string()
}

pub fn entity_iri_for(id: &str) -> String {
    if crate::rdf::check_iri(id).is_ok() {
        id.to_string()
    } else {
        format!("{ENTITY_URN_PREFIX}{id}")
    }
}

fn single<'g>(graph: &'g Graph, subject: &'g Term, predicate: &'g str) -> Result<Option<&'g Term>, String> {
    let objects: Vec<&Term> = graph.objects(subject, predicate).collect();
    match objects.as_slice() {
        [] => Ok(None),
        [one] => Ok(Some(one)),
        _ => Err(format!("{} values for <{predicate}>", objects.len())),
    }
}

fn required<'g>(graph: &'g Graph, subject: &'g Term, predicate: &'g str) -> Result<&'g Term, String> {
    single(graph, subject, predicate)?.ok_or_else(|| format!("missing <{predicate}>"))
}

fn parse_location(text: &str) -> Option<(f64, f64)> {
    let (lon, lat) = text.split_once(',')?;
    let lon: f64 = lon.trim().parse().ok()?;
    let lat: f64 = lat.trim().parse().ok()?;
    (lon.is_finite() && lat.is_finite()).then_some((lon, lat))
}

fn resolve_subject(descriptor: &Graph, subject: &Term, source: &str) -> Result<ResolvedTarget, String> {
    let entity = match required(descriptor, subject, MED_DESCRIBES_ENTITY)? {
        Term::Iri(iri) => entity_id_for(iri),
        other => return Err(format!("entity must be an IRI, got {other}")),
    };
    let entity_type = match required(descriptor, subject, MED_ENTITY_TYPE)? {
        Term::Iri(iri) => iri.clone(),
        other => return Err(format!("entity type must be an IRI, got {other}")),
    };
    let attribute_name = match required(descriptor, subject, MED_ATTRIBUTE_NAME)? {
        Term::Literal(l) if !l.lexical().is_empty() => l.lexical().to_string(),
        other => return Err(format!("attribute name must be a non-empty literal, got {other}")),
    };
    let literal = |p: &str| -> Result<Option<String>, String> {
        match single(descriptor, subject, p)? {
            None => Ok(None),
            Some(Term::Literal(l)) => Ok(Some(l.lexical().to_string())),
            Some(other) => Err(format!("<{p}> must be a literal, got {other}")),
        }
    };
    let location = match literal(MED_LOCATION)? {
        None => None,
        Some(text) => Some(parse_location(&text).ok_or_else(|| format!("location {text:?} is not \"lon,lat\""))?),
    };
    Ok(ResolvedTarget {
        subject: subject.to_string(),
        entity_id: entity,
        entity_type,
        attribute_name,
        unit: literal(MED_UNIT_OF_MEASURE)?,
        location,
        value_path: literal(MED_VALUE_PATH)?.unwrap_or_else(|| "/value".to_string()),
        source: source.to_string(),
    })
}

/// One result per subject carrying any mandatory mediation property, in
/// subject order.
pub fn resolve_targets(descriptor: &Graph, source: &str) -> Vec<Result<ResolvedTarget, ReasoningError>> {
    let subjects: BTreeSet<&Term> = [MED_DESCRIBES_ENTITY, MED_ENTITY_TYPE, MED_ATTRIBUTE_NAME]
        .iter()
        .flat_map(|p| descriptor.with_predicate(p).map(|t| t.subject()))
        .collect();
    subjects
        .into_iter()
        .map(|s| {
            resolve_subject(descriptor, s, source).map_err(|message| ReasoningError {
                subject: s.to_string(),
                message,
            })
        })
        .collect()
}
