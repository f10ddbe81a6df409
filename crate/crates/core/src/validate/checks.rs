use std::collections::{BTreeMap, BTreeSet};

use crate::knowledge::{is_known_datatype, Ontology};
use crate::rdf::vocab::*;
use crate::rdf::{parse_ntriples, Graph, Literal, Term, Triple};
use crate::rules::{forward_chain, Rule, RuleBase, RuleError, RuleSpec, DERIVATION_BOUND};
use crate::sparql::parse_sparql;

use super::datatypes::{lexical_fits, sample_lexical};
use super::report::{Category, ValidationError, ValidationReport};

fn syntactic(location: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError::new(Category::Syntactic, location, message)
}

fn semantic(location: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError::new(Category::Semantic, location, message)
}

fn logical(location: impl Into<String>, message: impl Into<String>) -> ValidationError {
    ValidationError::new(Category::Logical, location, message)
}

fn parse_or_report(text: &str) -> Result<Graph, ValidationError> {
    parse_ntriples(text).map_err(|e| syntactic(format!("line {}, column {}", e.line, e.column), e.message))
}

/// Ontology check: is the candidate ontology free of contradictions when merged
/// with the reference?
pub fn validate_ontology(candidate: &Graph, reference: &Ontology) -> ValidationReport {
    ValidationReport::timed(|| ontology_errors(candidate, reference))
}

pub fn validate_ontology_text(text: &str, reference: &Ontology) -> ValidationReport {
    ValidationReport::timed(|| match parse_or_report(text) {
        Ok(g) => ontology_errors(&g, reference),
        Err(e) => vec![e],
    })
}

fn ontology_errors(candidate: &Graph, reference: &Ontology) -> Vec<ValidationError> {
    let cand = match Ontology::load(candidate) {
        Ok(o) => o,
        Err(e) => return vec![semantic("rdfs:subClassOf", e.to_string())],
    };
    let merged = cand.merged(reference);
    let mut errors = Vec::new();

    for cycle in subclass_cycles(&merged) {
        errors.push(logical(
            cycle.join(", "),
            format!("subclass cycle among {} classes", cycle.len()),
        ));
    }

    let disjoint: Vec<(&str, &str)> = merged.disjoint_pairs().collect();
    if !disjoint.is_empty() {
        for class in merged.classes() {
            let ancestors = merged.superclasses_of(class);
            for &(p, q) in &disjoint {
                if ancestors.contains(p) && ancestors.contains(q) {
                    errors.push(logical(
                        class.clone(),
                        format!("class is subsumed by disjoint classes {p} and {q}"),
                    ));
                }
            }
        }
    }

    let class_ok = |iri: &str| merged.has_class(iri);
    for t in candidate.with_predicate(RDFS_DOMAIN) {
        match t.object() {
            Term::Iri(d) if class_ok(d) => {}
            other => errors.push(semantic(
                t.subject().to_string(),
                format!("rdfs:domain references undeclared class {other}"),
            )),
        }
    }
    for t in candidate.with_predicate(RDFS_RANGE) {
        match t.object() {
            Term::Iri(r) if class_ok(r) || is_known_datatype(r) => {}
            other => errors.push(semantic(
                t.subject().to_string(),
                format!("rdfs:range references undeclared class or datatype {other}"),
            )),
        }
    }

    let mut ranges: BTreeMap<&Term, BTreeSet<String>> = BTreeMap::new();
    for t in candidate.with_predicate(RDFS_RANGE) {
        ranges.entry(t.subject()).or_default().insert(t.object().to_string());
    }
    for (property, set) in &mut ranges {
        if let Some(r) = property
            .as_iri()
            .and_then(|p| reference.lookup_property(p))
            .and_then(|d| d.range.clone())
        {
            set.insert(format!("<{r}>"));
        }
        if set.len() > 1 {
            let list: Vec<&str> = set.iter().map(String::as_str).collect();
            errors.push(logical(
                property.to_string(),
                format!("property declared with conflicting ranges {}", list.join(", ")),
            ));
        }
    }
    errors
}

/// Strongly connected components of size > 1 in the subclass graph, each
/// sorted, in sorted order.
fn subclass_cycles(onto: &Ontology) -> Vec<Vec<String>> {
    let mut cycles = Vec::new();
    let mut assigned: BTreeSet<&str> = BTreeSet::new();
    for class in onto.classes() {
        if assigned.contains(class.as_str()) {
            continue;
        }
        let up = onto.superclasses_of(class);
        let component: Vec<String> = onto
            .subclasses_of(class)
            .into_iter()
            .filter(|c| up.contains(c))
            .collect();
        for c in &component {
            if let Some(k) = onto.classes().get(c) {
                assigned.insert(k.as_str());
            }
        }
        if component.len() > 1 {
            cycles.push(component);
        }
    }
    cycles
}

/// Annotation check: does an annotation use only declared terms with values that fit
/// the declared datatypes? Predicates in `whitelist` namespaces are exempt
/// from the declaration check.
pub fn validate_annotation(descriptor: &Graph, declared: &Ontology, whitelist: &[String]) -> ValidationReport {
    ValidationReport::timed(|| annotation_errors(descriptor, declared, whitelist))
}

pub fn validate_annotation_text(text: &str, declared: &Ontology, whitelist: &[String]) -> ValidationReport {
    ValidationReport::timed(|| match parse_or_report(text) {
        Ok(g) => annotation_errors(&g, declared, whitelist),
        Err(e) => vec![e],
    })
}

fn annotation_errors(descriptor: &Graph, declared: &Ontology, whitelist: &[String]) -> Vec<ValidationError> {
    let exempt = |iri: &str| whitelist.iter().any(|ns| iri.starts_with(ns.as_str()));
    let mut errors = Vec::new();
    for t in descriptor {
        let predicate = t.predicate_iri();
        if predicate == RDF_TYPE {
            if let Term::Iri(class) = t.object() {
                if !declared.has_class(class) && !exempt(class) {
                    errors.push(semantic(t.to_string(), format!("undeclared class <{class}>")));
                }
            }
            continue;
        }
        let Some(decl) = declared.lookup_property(predicate) else {
            if !exempt(predicate) {
                errors.push(semantic(t.to_string(), format!("undeclared property <{predicate}>")));
            }
            continue;
        };
        let Some(range) = &decl.range else { continue };
        match t.object() {
            Term::Literal(lit) if is_known_datatype(range) => {
                if !lexical_fits(range, lit.lexical()) {
                    errors.push(semantic(
                        t.to_string(),
                        format!("incompatible data type: {:?} is not a valid <{range}>", lit.lexical()),
                    ));
                }
            }
            Term::Literal(_) => errors.push(semantic(
                t.to_string(),
                format!("incompatible data type: literal where class <{range}> is declared"),
            )),
            _ if is_known_datatype(range) => errors.push(semantic(
                t.to_string(),
                format!("incompatible data type: resource where datatype <{range}> is declared"),
            )),
            _ => {}
        }
    }
    errors
}

/// Rule check: does adding `candidate` to `base` make the closure over the
/// witness graph contradictory? Only contradictions absent from the base's
/// own closure are reported.
pub fn validate_rule(
    candidate: &RuleSpec,
    base: &RuleBase,
    onto: &Ontology,
    witness: Option<&Graph>,
) -> ValidationReport {
    ValidationReport::timed(|| rule_errors(candidate, base, onto, witness))
}

fn rule_errors(
    candidate: &RuleSpec,
    base: &RuleBase,
    onto: &Ontology,
    witness: Option<&Graph>,
) -> Vec<ValidationError> {
    let rule = match Rule::parse(candidate).and_then(|r| r.check_safe().map(|_| r)) {
        Ok(r) => r,
        Err(e) => {
            let location = match &e {
                RuleError::Syntax { part, index, .. } => format!("{} {part} {index}", candidate.rule_id),
                _ => candidate.rule_id.clone(),
            };
            return vec![syntactic(location, e.to_string())];
        }
    };
    if base.contains(&rule.id) {
        return vec![syntactic(
            rule.id.clone(),
            format!("rule id {} already in the rule base", rule.id),
        )];
    }

    let generated;
    let witness = match witness {
        Some(w) => w,
        None => {
            generated = canonical_witness(onto);
            &generated
        }
    };

    let combined = match forward_chain(witness, base.rules().iter().chain([&rule]), DERIVATION_BOUND) {
        Ok(c) => c,
        Err(e) => return vec![logical(rule.id.clone(), format!("non-terminating closure: {e}"))],
    };
    let before: BTreeSet<Clash> = forward_chain(witness, base.rules(), DERIVATION_BOUND)
        .map(|c| clashes(&c.graph, onto))
        .unwrap_or_default();

    clashes(&combined.graph, onto)
        .into_iter()
        .filter(|c| !before.contains(c))
        .map(|c| match c {
            Clash::Functional {
                subject,
                property,
                values,
            } => logical(
                format!("{} on {subject}", rule.id),
                format!(
                    "functional property {property} derives conflicting values {}",
                    values.join(", ")
                ),
            ),
            Clash::Disjoint { subject, first, second } => logical(
                format!("{} on {subject}", rule.id),
                format!("subject typed into disjoint classes <{first}> and <{second}>"),
            ),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Clash {
    Functional {
        subject: String,
        property: String,
        values: Vec<String>,
    },
    Disjoint {
        subject: String,
        first: String,
        second: String,
    },
}

fn clashes(graph: &Graph, onto: &Ontology) -> BTreeSet<Clash> {
    let mut out = BTreeSet::new();
    for decl in onto.properties().filter(|p| p.functional) {
        let mut by_subject: BTreeMap<&Term, BTreeSet<&Term>> = BTreeMap::new();
        for t in graph.with_predicate(&decl.iri) {
            by_subject.entry(t.subject()).or_default().insert(t.object());
        }
        for (subject, values) in by_subject {
            if values.len() > 1 {
                out.insert(Clash::Functional {
                    subject: subject.to_string(),
                    property: format!("<{}>", decl.iri),
                    values: values.iter().map(|v| v.to_string()).collect(),
                });
            }
        }
    }
    let disjoint: Vec<(&str, &str)> = onto.disjoint_pairs().collect();
    if disjoint.is_empty() {
        return out;
    }
    let mut types: BTreeMap<&Term, BTreeSet<String>> = BTreeMap::new();
    for t in graph.with_predicate(RDF_TYPE) {
        if let Term::Iri(class) = t.object() {
            types
                .entry(t.subject())
                .or_default()
                .extend(onto.superclasses_of(class));
        }
    }
    for (subject, classes) in types {
        for &(a, b) in &disjoint {
            if classes.contains(a) && classes.contains(b) {
                out.insert(Clash::Disjoint {
                    subject: subject.to_string(),
                    first: a.to_string(),
                    second: b.to_string(),
                });
            }
        }
    }
    out
}

/// One instance per class and one triple per property, linking instances of
/// the declared domain and range where available.
pub fn canonical_witness(onto: &Ontology) -> Graph {
    let mut g = Graph::new();
    let rdf_type = Term::Iri(RDF_TYPE.to_string());
    let mut instances: BTreeMap<&str, Term> = BTreeMap::new();
    for (i, class) in onto.classes().iter().enumerate() {
        let inst = Term::Iri(format!("urn:witness:c{i}"));
        g.insert(Triple::new(inst.clone(), rdf_type.clone(), Term::Iri(class.clone())).expect("valid triple"));
        instances.insert(class, inst);
    }
    for (i, decl) in onto.properties().enumerate() {
        let subject = decl
            .domain
            .as_deref()
            .and_then(|d| instances.get(d).cloned())
            .unwrap_or_else(|| Term::Iri(format!("urn:witness:s{i}")));
        let object = match decl.range.as_deref() {
            Some(r) if is_known_datatype(r) => Literal::typed(sample_lexical(r), r)
                .map(Term::Literal)
                .unwrap_or_else(|_| Term::literal("witness")),
            Some(r) => instances
                .get(r)
                .cloned()
                .unwrap_or_else(|| Term::Iri(format!("urn:witness:o{i}"))),
            None => Term::Iri(format!("urn:witness:o{i}")),
        };
        if let Ok(t) = Triple::new(subject, Term::Iri(decl.iri.clone()), object) {
            g.insert(t);
        }
    }
    g
}

/// Query check: syntax only.
pub fn validate_sparql(text: &str) -> ValidationReport {
    ValidationReport::timed(|| match parse_sparql(text) {
        Ok(_) => Vec::new(),
        Err(e) => vec![syntactic(format!("position {}", e.position), e.message)],
    })
}
