use std::collections::BTreeMap;
use std::fmt;

use super::graph::{Graph, Triple};
use super::term::Term;

/// Variable name without the leading `?`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Option<Self> {
        let name = name.into();
        let mut chars = name.chars();
        let ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic())
            && chars.all(|c| c.is_ascii_alphanumeric() || c == '_');
        ok.then_some(Variable(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "?{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PatternTerm {
    Term(Term),
    Var(Variable),
}

impl PatternTerm {
    pub fn var(name: &str) -> Self {
        PatternTerm::Var(Variable::new(name).expect("valid variable name"))
    }

    pub fn as_var(&self) -> Option<&Variable> {
        match self {
            PatternTerm::Var(v) => Some(v),
            PatternTerm::Term(_) => None,
        }
    }

    /// Substitutes a bound variable; ground terms pass through.
    pub fn resolve<'a>(&'a self, bindings: &'a BindingSet) -> Option<&'a Term> {
        match self {
            PatternTerm::Term(t) => Some(t),
            PatternTerm::Var(v) => bindings.get(v.name()),
        }
    }
}

impl From<Term> for PatternTerm {
    fn from(t: Term) -> Self {
        PatternTerm::Term(t)
    }
}

impl From<Variable> for PatternTerm {
    fn from(v: Variable) -> Self {
        PatternTerm::Var(v)
    }
}

impl fmt::Display for PatternTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternTerm::Term(t) => t.fmt(f),
            PatternTerm::Var(v) => v.fmt(f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TriplePattern {
    pub subject: PatternTerm,
    pub predicate: PatternTerm,
    pub object: PatternTerm,
}

impl TriplePattern {
    pub fn new(
        subject: impl Into<PatternTerm>,
        predicate: impl Into<PatternTerm>,
        object: impl Into<PatternTerm>,
    ) -> Self {
        TriplePattern {
            subject: subject.into(),
            predicate: predicate.into(),
            object: object.into(),
        }
    }

    pub fn positions(&self) -> [&PatternTerm; 3] {
        [&self.subject, &self.predicate, &self.object]
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        self.positions().into_iter().filter_map(PatternTerm::as_var)
    }

    /// Extends `bindings` so that this pattern equals `triple`, or returns
    /// `None` when they cannot be unified.
    pub fn unify(&self, triple: &Triple, bindings: &BindingSet) -> Option<BindingSet> {
        let mut out = bindings.clone();
        for (pat, term) in self.positions().into_iter().zip(triple.terms()) {
            match pat {
                PatternTerm::Term(t) if t == term => {}
                PatternTerm::Term(_) => return None,
                PatternTerm::Var(v) => match out.get(v.name()) {
                    Some(bound) if bound == term => {}
                    Some(_) => return None,
                    None => {
                        out.insert(v.name().to_string(), term.clone());
                    }
                },
            }
        }
        Some(out)
    }

    /// Grounds the pattern under `bindings`. Fails if a variable is unbound or
    /// the result is not a legal triple.
    pub fn instantiate(&self, bindings: &BindingSet) -> Option<Triple> {
        let s = self.subject.resolve(bindings)?.clone();
        let p = self.predicate.resolve(bindings)?.clone();
        let o = self.object.resolve(bindings)?.clone();
        Triple::new(s, p, o).ok()
    }
}

impl fmt::Display for TriplePattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.subject, self.predicate, self.object)
    }
}

/// Variable name → bound term.
pub type BindingSet = BTreeMap<String, Term>;

/// All bindings of `pattern` against `graph`, sorted.
pub fn match_pattern(graph: &Graph, pattern: &TriplePattern) -> Vec<BindingSet> {
    let empty = BindingSet::new();
    let mut out: Vec<BindingSet> = graph.iter().filter_map(|t| pattern.unify(t, &empty)).collect();
    out.sort();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iri(s: &str) -> Term {
        Term::iri(s).unwrap()
    }

    #[test]
    fn variable_names() {
        assert!(Variable::new("s").is_some());
        assert!(Variable::new("s_1").is_some());
        assert!(Variable::new("1s").is_none());
        assert!(Variable::new("").is_none());
    }

    #[test]
    fn single_binding() {
        let g: Graph = [Triple::new(iri("http://a"), iri("http://b"), iri("http://c")).unwrap()]
            .into_iter()
            .collect();
        let p = TriplePattern::new(PatternTerm::var("s"), iri("http://b"), iri("http://c"));
        let res = match_pattern(&g, &p);
        assert_eq!(res.len(), 1);
        assert_eq!(res[0]["s"], iri("http://a"));
    }

    #[test]
    fn empty_graph() {
        let p = TriplePattern::new(PatternTerm::var("s"), PatternTerm::var("p"), PatternTerm::var("o"));
        assert!(match_pattern(&Graph::new(), &p).is_empty());
    }

    #[test]
    fn repeated_variable_must_agree() {
        let g: Graph = [
            Triple::new(iri("http://a"), iri("http://p"), iri("http://a")).unwrap(),
            Triple::new(iri("http://a"), iri("http://p"), iri("http://b")).unwrap(),
        ]
        .into_iter()
        .collect();
        let p = TriplePattern::new(PatternTerm::var("x"), iri("http://p"), PatternTerm::var("x"));
        assert_eq!(match_pattern(&g, &p).len(), 1);
    }

    #[test]
    fn ground_pattern() {
        let t = Triple::new(iri("http://a"), iri("http://b"), iri("http://c")).unwrap();
        let g: Graph = [t.clone()].into_iter().collect();
        let p = TriplePattern::new(iri("http://a"), iri("http://b"), iri("http://c"));
        assert_eq!(match_pattern(&g, &p), vec![BindingSet::new()]);
        let miss = TriplePattern::new(iri("http://a"), iri("http://b"), iri("http://d"));
        assert!(match_pattern(&g, &miss).is_empty());
    }

    mod props {
        use proptest::prelude::*;

        use super::super::*;
        use crate::rdf::strategies::{graph, node, object, predicate};

        fn slot(t: impl Strategy<Value = Term>, var: &'static str) -> impl Strategy<Value = PatternTerm> {
            prop_oneof![t.prop_map(PatternTerm::Term), Just(PatternTerm::var(var))]
        }

        fn pattern() -> impl Strategy<Value = TriplePattern> {
            let shared = prop::sample::select(vec!["x", "y"]);
            (
                slot(node(), "s"),
                slot(predicate(), "p"),
                slot(object(), "o"),
                shared,
                any::<bool>(),
            )
                .prop_map(|(s, p, o, v, tie)| {
                    // sometimes reuse one variable in subject and object
                    if tie {
                        TriplePattern::new(PatternTerm::var(v), p, PatternTerm::var(v))
                    } else {
                        TriplePattern::new(s, p, o)
                    }
                })
        }

        proptest! {
            #[test]
            fn bindings_instantiate_to_graph_triples(g in graph(30), p in pattern()) {
                let found = match_pattern(&g, &p);
                for b in &found {
                    let t = p.instantiate(b).expect("all pattern variables bound");
                    prop_assert!(g.contains(&t));
                }
                // every matching triple is represented
                let hits = g.iter().filter(|t| {
                    let empty = BindingSet::new();
                    p.unify(t, &empty).is_some()
                }).count();
                prop_assert!(found.len() <= hits);
                prop_assert_eq!(found.is_empty(), hits == 0);
            }

            #[test]
            fn indexed_lookup_agrees_with_scan(g in graph(30), p in pattern()) {
                let empty = BindingSet::new();
                let via_index: BTreeSet<Triple> = g
                    .matching(p.subject.resolve(&empty), p.predicate.resolve(&empty), p.object.resolve(&empty))
                    .filter(|t| p.unify(t, &empty).is_some())
                    .cloned()
                    .collect();
                let via_scan: BTreeSet<Triple> =
                    g.iter().filter(|t| p.unify(t, &empty).is_some()).cloned().collect();
                prop_assert_eq!(via_index, via_scan);
            }
        }

        use std::collections::BTreeSet;
    }
}
