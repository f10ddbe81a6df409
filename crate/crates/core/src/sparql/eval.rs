use std::collections::BTreeSet;

use serde_json::{json, Map, Value};

use crate::rdf::{BindingSet, Graph, PatternTerm, TriplePattern};

use super::ast::{FilterExpr, Projection, Query, QueryForm};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QueryResult {
    Solutions(Vec<BindingSet>),
    Boolean(bool),
}

impl QueryResult {
    /// True for a successful ASK or a non-empty SELECT.
    pub fn matched(&self) -> bool {
        match self {
            QueryResult::Solutions(s) => !s.is_empty(),
            QueryResult::Boolean(b) => *b,
        }
    }

    /// `{"boolean": b}` or `{"solutions": [{"var": "<n-triples term>"}, ...]}`.
    pub fn to_json(&self) -> Value {
        match self {
            QueryResult::Boolean(b) => json!({ "boolean": b }),
            QueryResult::Solutions(rows) => {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = row
                            .iter()
                            .map(|(k, v)| (k.clone(), Value::String(v.to_string())))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                json!({ "solutions": rows })
            }
        }
    }
}

pub fn evaluate(query: &Query, graph: &Graph) -> QueryResult {
    match &query.form {
        QueryForm::Ask => {
            let found = !solve(&query.patterns, &query.filters, graph, true).is_empty();
            QueryResult::Boolean(found)
        }
        QueryForm::Select(projection) => {
            let rows = solve(&query.patterns, &query.filters, graph, false);
            let mut rows: Vec<BindingSet> = match projection {
                Projection::All => rows,
                Projection::Vars(vars) => rows
                    .into_iter()
                    .map(|row| {
                        vars.iter()
                            .filter_map(|v| row.get(v.name()).map(|t| (v.name().to_string(), t.clone())))
                            .collect()
                    })
                    .collect(),
            };
            rows.sort();
            rows.dedup();
            QueryResult::Solutions(rows)
        }
    }
}

/// Solutions of a basic graph pattern with filters, unprojected and
/// deduplicated. With `first_only` the search stops at the first solution.
pub fn solve(patterns: &[TriplePattern], filters: &[FilterExpr], graph: &Graph, first_only: bool) -> Vec<BindingSet> {
    let order = join_order(patterns, graph);
    let ordered: Vec<&TriplePattern> = order.iter().map(|&i| &patterns[i]).collect();
    let mut out = BTreeSet::new();
    extend(&ordered, filters, graph, BindingSet::new(), first_only, &mut out);
    out.into_iter().collect()
}

/// Evaluates `patterns` in the given order; used to check join-order
/// independence.
pub fn solve_in_order(patterns: &[TriplePattern], filters: &[FilterExpr], graph: &Graph) -> Vec<BindingSet> {
    let ordered: Vec<&TriplePattern> = patterns.iter().collect();
    let mut out = BTreeSet::new();
    extend(&ordered, filters, graph, BindingSet::new(), false, &mut out);
    out.into_iter().collect()
}

fn extend(
    patterns: &[&TriplePattern],
    filters: &[FilterExpr],
    graph: &Graph,
    bindings: BindingSet,
    first_only: bool,
    out: &mut BTreeSet<BindingSet>,
) -> bool {
    let Some((head, rest)) = patterns.split_first() else {
        if filters.iter().all(|f| f.holds(&bindings)) {
            out.insert(bindings);
            return first_only;
        }
        return false;
    };
    let candidates = graph.matching(
        head.subject.resolve(&bindings),
        head.predicate.resolve(&bindings),
        head.object.resolve(&bindings),
    );
    for triple in candidates {
        if let Some(next) = head.unify(triple, &bindings) {
            if extend(rest, filters, graph, next, first_only, out) {
                return true;
            }
        }
    }
    false
}

/// Greedy most-selective-first ordering: prefer patterns with more
/// positions fixed (constants or variables bound by earlier patterns), then
/// fewer candidate triples.
fn join_order(patterns: &[TriplePattern], graph: &Graph) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..patterns.len()).collect();
    let mut bound: BTreeSet<&str> = BTreeSet::new();
    let mut order = Vec::with_capacity(patterns.len());
    while !remaining.is_empty() {
        let (slot, &best) = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &i)| {
                let p = &patterns[i];
                let fixed = p
                    .positions()
                    .into_iter()
                    .filter(|pt| match pt {
                        PatternTerm::Term(_) => true,
                        PatternTerm::Var(v) => bound.contains(v.name()),
                    })
                    .count();
                (3 - fixed, constant_matches(p, graph), i)
            })
            .expect("remaining is non-empty");
        remaining.remove(slot);
        bound.extend(patterns[best].variables().map(|v| v.name()));
        order.push(best);
    }
    order
}

fn constant_matches(pattern: &TriplePattern, graph: &Graph) -> usize {
    let constant = |p: &PatternTerm| match p {
        PatternTerm::Term(t) => Some(t.clone()),
        PatternTerm::Var(_) => None,
    };
    let (s, p, o) = (
        constant(&pattern.subject),
        constant(&pattern.predicate),
        constant(&pattern.object),
    );
    graph.matching(s.as_ref(), p.as_ref(), o.as_ref()).count()
}
